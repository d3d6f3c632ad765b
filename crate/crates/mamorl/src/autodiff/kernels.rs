//! Dense f64 matrix kernels. All loops run in a fixed order so results
//! are bit-reproducible.

/// out[r x c] += a[r x k] * b[k x c]  (out must be zeroed by the caller
/// when a plain product is wanted).
pub fn mm_nn(a: &[f64], b: &[f64], out: &mut [f64], r: usize, k: usize, c: usize) {
    debug_assert_eq!(a.len(), r * k);
    debug_assert_eq!(b.len(), k * c);
    debug_assert_eq!(out.len(), r * c);
    for i in 0..r {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * c..(i + 1) * c];
        for (kk, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b[kk * c..(kk + 1) * c];
            for j in 0..c {
                orow[j] += av * brow[j];
            }
        }
    }
}

/// out[r x k] += a[r x c] * b[k x c]^T  (row-by-row dot products).
pub fn mm_nt(a: &[f64], b: &[f64], out: &mut [f64], r: usize, c: usize, k: usize) {
    debug_assert_eq!(a.len(), r * c);
    debug_assert_eq!(b.len(), k * c);
    debug_assert_eq!(out.len(), r * k);
    for i in 0..r {
        let arow = &a[i * c..(i + 1) * c];
        let orow = &mut out[i * k..(i + 1) * k];
        for kk in 0..k {
            let brow = &b[kk * c..(kk + 1) * c];
            let mut s = 0.0;
            for j in 0..c {
                s += arow[j] * brow[j];
            }
            orow[kk] += s;
        }
    }
}

/// out[k x c] += a[r x k]^T * b[r x c].
pub fn mm_tn(a: &[f64], b: &[f64], out: &mut [f64], r: usize, k: usize, c: usize) {
    debug_assert_eq!(a.len(), r * k);
    debug_assert_eq!(b.len(), r * c);
    debug_assert_eq!(out.len(), k * c);
    for i in 0..r {
        let brow = &b[i * c..(i + 1) * c];
        for kk in 0..k {
            let av = a[i * k + kk];
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[kk * c..(kk + 1) * c];
            for j in 0..c {
                orow[j] += av * brow[j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transposed_kernels_agree_with_plain_product() {
        let a = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // 2x3
        let b = vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]; // 3x2
        let mut nn = vec![0.0; 4];
        mm_nn(&a, &b, &mut nn, 2, 3, 2);
        assert_eq!(nn, vec![58.0, 64.0, 139.0, 154.0]);

        // a * b == a * (b^T)^T via mm_nt with b stored transposed.
        let bt = vec![7.0, 9.0, 11.0, 8.0, 10.0, 12.0]; // 2x3 = b^T
        let mut nt = vec![0.0; 4];
        mm_nt(&a, &bt, &mut nt, 2, 3, 2);
        assert_eq!(nt, nn);

        // a^T stored plainly, multiplied through mm_tn.
        let mut tn = vec![0.0; 9];
        mm_tn(&a, &a, &mut tn, 2, 3, 3); // a^T a, 3x3
        assert_eq!(tn[0], 1.0 * 1.0 + 4.0 * 4.0);
        assert_eq!(tn[4], 2.0 * 2.0 + 5.0 * 5.0);
    }
}
