//! Reverse-mode automatic differentiation over shaped `f64` tensors.
//!
//! Define-by-run: every differentiable operation is a method on [`Tape`]
//! that computes the forward value immediately and records a backward
//! closure. [`Tape::backward`] replays the closures in reverse order,
//! accumulating `d loss / d node` into each node's `grad` buffer.
//!
//! Tensors are rank 1 or 2 (`[n]` or `[rows, cols]`). Bias-style
//! broadcasting of a `[c]` operand along the leading dimension is the
//! only implicit broadcast; everything else must match shapes exactly.

mod adam;
mod gradcheck;
mod kernels;

pub use adam::{adam_step, Adam, AdamState};
pub use gradcheck::finite_difference_check;

use std::cell::{Ref, RefCell};
use std::rc::Rc;

use crate::error::{Error, Result};

const LAYER_NORM_EPS: f64 = 1e-5;

pub struct TensorData {
    shape: Vec<usize>,
    values: RefCell<Vec<f64>>,
    grad: RefCell<Vec<f64>>,
    requires_grad: bool,
    tracked: bool,
    name: String,
}

/// Shaped array of 64-bit reals participating in a gradient tape.
///
/// Cheap to clone (shared reference); `values` and `grad` always have
/// `product(shape)` elements.
#[derive(Clone)]
pub struct Tensor(Rc<TensorData>);

impl Tensor {
    fn new(shape: Vec<usize>, values: Vec<f64>, requires_grad: bool, tracked: bool, name: &str) -> Self {
        let n: usize = shape.iter().product();
        assert_eq!(n, values.len(), "shape {:?} does not match {} values", shape, values.len());
        Tensor(Rc::new(TensorData {
            shape,
            grad: RefCell::new(vec![0.0; values.len()]),
            values: RefCell::new(values),
            requires_grad,
            tracked,
            name: name.to_string(),
        }))
    }

    /// Leaf that receives gradients (network parameters, probed inputs).
    pub fn param(shape: Vec<usize>, values: Vec<f64>, name: &str) -> Self {
        Self::new(shape, values, true, true, name)
    }

    /// Leaf that never receives gradients (batch data, target-net weights).
    pub fn constant(shape: Vec<usize>, values: Vec<f64>) -> Self {
        Self::new(shape, values, false, false, "")
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self::constant(shape, vec![0.0; n])
    }

    fn output(shape: Vec<usize>, values: Vec<f64>, tracked: bool) -> Self {
        Self::new(shape, values, false, tracked, "")
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn len(&self) -> usize {
        self.0.values.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    fn tracked(&self) -> bool {
        self.0.tracked
    }

    pub fn data(&self) -> Ref<'_, Vec<f64>> {
        self.0.values.borrow()
    }

    pub fn grad(&self) -> Ref<'_, Vec<f64>> {
        self.0.grad.borrow()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.values.borrow().clone()
    }

    pub fn grad_vec(&self) -> Vec<f64> {
        self.0.grad.borrow().clone()
    }

    /// Scalar value of a one-element tensor.
    pub fn item(&self) -> f64 {
        let v = self.0.values.borrow();
        assert_eq!(v.len(), 1, "item() on tensor of shape {:?}", self.0.shape);
        v[0]
    }

    /// Overwrite values in place; length must match.
    pub fn set_values(&self, values: &[f64]) {
        let mut v = self.0.values.borrow_mut();
        assert_eq!(v.len(), values.len());
        v.copy_from_slice(values);
    }

    pub fn nudge_value(&self, index: usize, delta: f64) {
        self.0.values.borrow_mut()[index] += delta;
    }

    pub fn zero_grad(&self) {
        self.0.grad.borrow_mut().iter_mut().for_each(|g| *g = 0.0);
    }

    /// Overwrite the gradient buffer (used when gradients are harvested
    /// from several backward passes and written back selectively).
    pub fn set_grad(&self, g: &[f64]) {
        let mut grad = self.0.grad.borrow_mut();
        assert_eq!(grad.len(), g.len());
        grad.copy_from_slice(g);
    }

    /// Deep copy with fresh zero gradients. `requires_grad` is preserved
    /// unless `detach` is set (used for target networks).
    pub fn deep_clone(&self, detach: bool) -> Tensor {
        let rg = self.0.requires_grad && !detach;
        Tensor::new(self.0.shape.clone(), self.to_vec(), rg, rg, &self.0.name)
    }

    /// Rows/cols view: `[n]` counts as one row of n columns.
    fn dims2(&self) -> (usize, usize) {
        match self.0.shape.len() {
            1 => (1, self.0.shape[0]),
            2 => (self.0.shape[0], self.0.shape[1]),
            _ => panic!("rank-{} tensor where rank 1 or 2 expected", self.0.shape.len()),
        }
    }

    fn accumulate_grad(&self, delta: &[f64]) {
        let mut g = self.0.grad.borrow_mut();
        for (gi, di) in g.iter_mut().zip(delta) {
            *gi += di;
        }
    }
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.0.shape)
            .field("name", &self.0.name)
            .field("requires_grad", &self.0.requires_grad)
            .finish()
    }
}

type BackwardFn = Box<dyn Fn()>;

/// Records one forward pass; replay in reverse computes gradients.
///
/// A tape is built per forward pass and dropped afterwards. Backward may
/// be invoked for several scalar losses on the same tape; leaf gradients
/// accumulate additively across calls, intermediate gradients are reset
/// at the start of each call.
#[derive(Default)]
pub struct Tape {
    ops: RefCell<Vec<BackwardFn>>,
    outputs: RefCell<Vec<Tensor>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_ops(&self) -> usize {
        self.ops.borrow().len()
    }

    fn record(&self, out: &Tensor, back: BackwardFn) {
        self.outputs.borrow_mut().push(out.clone());
        self.ops.borrow_mut().push(back);
    }

    /// Propagate `d loss` into every tracked ancestor of `loss`.
    pub fn backward(&self, loss: &Tensor) -> Result<()> {
        if loss.len() != 1 {
            return Err(Error::NonScalarLoss(loss.shape().to_vec()));
        }
        for out in self.outputs.borrow().iter() {
            out.zero_grad();
        }
        loss.0.grad.borrow_mut()[0] = 1.0;
        for op in self.ops.borrow().iter().rev() {
            op();
        }
        Ok(())
    }

    /// Matrix product `[r,k] x [k,c] -> [r,c]`.
    pub fn matmul(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        let (r, ka) = a.dims2();
        let (kb, c) = b.dims2();
        if ka != kb || a.shape().len() != 2 || b.shape().len() != 2 {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let mut out = vec![0.0; r * c];
        kernels::mm_nn(&a.data(), &b.data(), &mut out, r, ka, c);
        let y = Tensor::output(vec![r, c], out, a.tracked() || b.tracked());
        if y.tracked() {
            let (a, b, y2) = (a.clone(), b.clone(), y.clone());
            self.record(
                &y,
                Box::new(move || {
                    let dy = y2.grad();
                    if a.tracked() {
                        let mut da = a.0.grad.borrow_mut();
                        kernels::mm_nt(&dy, &b.data(), &mut da, r, c, ka);
                    }
                    if b.tracked() {
                        let mut db = b.0.grad.borrow_mut();
                        kernels::mm_tn(&a.data(), &dy, &mut db, r, ka, c);
                    }
                }),
            );
        }
        Ok(y)
    }

    fn binary_elementwise(
        &self,
        op: &'static str,
        a: &Tensor,
        b: &Tensor,
        f: impl Fn(f64, f64) -> f64,
        make_back: impl FnOnce(Tensor, Tensor, Tensor, bool) -> BackwardFn,
    ) -> Result<Tensor> {
        let (ra, ca) = a.dims2();
        let (_, cb) = b.dims2();
        // Same shape, or `b` is a [c]-vector broadcast along the leading dim.
        let broadcast = b.shape().len() == 1 && ca == cb && ra >= 1 && a.shape().len() == 2;
        if !(a.shape() == b.shape() || broadcast) {
            return Err(Error::ShapeMismatch {
                op,
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let av = a.data();
        let bv = b.data();
        let mut out = vec![0.0; av.len()];
        if broadcast {
            for i in 0..ra {
                for j in 0..ca {
                    out[i * ca + j] = f(av[i * ca + j], bv[j]);
                }
            }
        } else {
            for (o, (x, y)) in out.iter_mut().zip(av.iter().zip(bv.iter())) {
                *o = f(*x, *y);
            }
        }
        drop(av);
        drop(bv);
        let y = Tensor::output(a.shape().to_vec(), out, a.tracked() || b.tracked());
        if y.tracked() {
            let back = make_back(a.clone(), b.clone(), y.clone(), broadcast);
            self.record(&y, back);
        }
        Ok(y)
    }

    /// Elementwise sum; `b` may be a `[c]` bias broadcast along rows.
    pub fn add(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        self.binary_elementwise("add", a, b, |x, y| x + y, |a, b, y, broadcast| {
            Box::new(move || {
                let dy = y.grad();
                if a.tracked() {
                    a.accumulate_grad(&dy);
                }
                if b.tracked() {
                    let mut db = b.0.grad.borrow_mut();
                    if broadcast {
                        let c = db.len();
                        for (i, d) in dy.iter().enumerate() {
                            db[i % c] += d;
                        }
                    } else {
                        for (g, d) in db.iter_mut().zip(dy.iter()) {
                            *g += d;
                        }
                    }
                }
            })
        })
    }

    /// Elementwise difference; `b` may be a `[c]` vector broadcast along rows.
    pub fn sub(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        self.binary_elementwise("sub", a, b, |x, y| x - y, |a, b, y, broadcast| {
            Box::new(move || {
                let dy = y.grad();
                if a.tracked() {
                    a.accumulate_grad(&dy);
                }
                if b.tracked() {
                    let mut db = b.0.grad.borrow_mut();
                    if broadcast {
                        let c = db.len();
                        for (i, d) in dy.iter().enumerate() {
                            db[i % c] -= d;
                        }
                    } else {
                        for (g, d) in db.iter_mut().zip(dy.iter()) {
                            *g -= d;
                        }
                    }
                }
            })
        })
    }

    /// Hadamard product; `b` may be a `[c]` vector broadcast along rows.
    pub fn mul(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        self.binary_elementwise("mul", a, b, |x, y| x * y, |a, b, y, broadcast| {
            Box::new(move || {
                let dy = y.grad();
                let (_, c) = a.dims2();
                if a.tracked() {
                    let bv = b.data();
                    let mut da = a.0.grad.borrow_mut();
                    for (i, d) in dy.iter().enumerate() {
                        da[i] += d * if broadcast { bv[i % c] } else { bv[i] };
                    }
                }
                if b.tracked() {
                    let av = a.data();
                    let mut db = b.0.grad.borrow_mut();
                    if broadcast {
                        for (i, d) in dy.iter().enumerate() {
                            db[i % c] += d * av[i];
                        }
                    } else {
                        for (i, d) in dy.iter().enumerate() {
                            db[i] += d * av[i];
                        }
                    }
                }
            })
        })
    }

    pub fn relu(&self, x: &Tensor) -> Tensor {
        let out: Vec<f64> = x.data().iter().map(|&v| v.max(0.0)).collect();
        let y = Tensor::output(x.shape().to_vec(), out, x.tracked());
        if y.tracked() {
            let (x, y2) = (x.clone(), y.clone());
            self.record(
                &y,
                Box::new(move || {
                    let dy = y2.grad();
                    let xv = x.data();
                    let mut dx = x.0.grad.borrow_mut();
                    for i in 0..dx.len() {
                        if xv[i] > 0.0 {
                            dx[i] += dy[i];
                        }
                    }
                }),
            );
        }
        y
    }

    pub fn tanh(&self, x: &Tensor) -> Tensor {
        let out: Vec<f64> = x.data().iter().map(|&v| v.tanh()).collect();
        let y = Tensor::output(x.shape().to_vec(), out, x.tracked());
        if y.tracked() {
            let (x, y2) = (x.clone(), y.clone());
            self.record(
                &y,
                Box::new(move || {
                    let dy = y2.grad();
                    let yv = y2.data();
                    let mut dx = x.0.grad.borrow_mut();
                    for i in 0..dx.len() {
                        dx[i] += dy[i] * (1.0 - yv[i] * yv[i]);
                    }
                }),
            );
        }
        y
    }

    /// Per-row normalization to zero mean / unit variance, then affine.
    pub fn layer_norm(&self, x: &Tensor, gain: &Tensor, bias: &Tensor) -> Result<Tensor> {
        let (r, d) = x.dims2();
        if d < 2 {
            return Err(Error::DegenerateNorm(d));
        }
        if gain.len() != d || bias.len() != d {
            return Err(Error::ShapeMismatch {
                op: "layer_norm",
                lhs: x.shape().to_vec(),
                rhs: gain.shape().to_vec(),
            });
        }
        let xv = x.data();
        let gv = gain.data();
        let bv = bias.data();
        let mut out = vec![0.0; r * d];
        let mut xhat = vec![0.0; r * d];
        let mut inv_std = vec![0.0; r];
        for i in 0..r {
            let row = &xv[i * d..(i + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            inv_std[i] = inv;
            for j in 0..d {
                let xh = (row[j] - mean) * inv;
                xhat[i * d + j] = xh;
                out[i * d + j] = gv[j] * xh + bv[j];
            }
        }
        drop(xv);
        drop(gv);
        drop(bv);
        let tracked = x.tracked() || gain.tracked() || bias.tracked();
        let y = Tensor::output(x.shape().to_vec(), out, tracked);
        if tracked {
            let (x, gain, bias, y2) = (x.clone(), gain.clone(), bias.clone(), y.clone());
            self.record(
                &y,
                Box::new(move || {
                    let dy = y2.grad();
                    let gv = gain.data();
                    if gain.tracked() {
                        let mut dg = gain.0.grad.borrow_mut();
                        for i in 0..r {
                            for j in 0..d {
                                dg[j] += dy[i * d + j] * xhat[i * d + j];
                            }
                        }
                    }
                    if bias.tracked() {
                        let mut db = bias.0.grad.borrow_mut();
                        for i in 0..r {
                            for j in 0..d {
                                db[j] += dy[i * d + j];
                            }
                        }
                    }
                    if x.tracked() {
                        let mut dx = x.0.grad.borrow_mut();
                        let dn = d as f64;
                        for i in 0..r {
                            // d xhat = g .* dy; dx = inv_std * (dxh - mean(dxh) - xhat * mean(dxh .* xhat))
                            let mut sum_dxh = 0.0;
                            let mut sum_dxh_xh = 0.0;
                            for j in 0..d {
                                let dxh = dy[i * d + j] * gv[j];
                                sum_dxh += dxh;
                                sum_dxh_xh += dxh * xhat[i * d + j];
                            }
                            for j in 0..d {
                                let dxh = dy[i * d + j] * gv[j];
                                dx[i * d + j] += inv_std[i]
                                    * (dxh - sum_dxh / dn - xhat[i * d + j] * sum_dxh_xh / dn);
                            }
                        }
                    }
                }),
            );
        }
        Ok(y)
    }

    /// Row-wise softmax with max-subtraction.
    pub fn softmax(&self, x: &Tensor) -> Result<Tensor> {
        let (r, c) = x.dims2();
        {
            let xv = x.data();
            if xv.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericInput { op: "softmax" });
            }
        }
        let xv = x.data();
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            let row = &xv[i * c..(i + 1) * c];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let orow = &mut out[i * c..(i + 1) * c];
            let mut sum = 0.0;
            for j in 0..c {
                let e = (row[j] - max).exp();
                orow[j] = e;
                sum += e;
            }
            for o in orow.iter_mut() {
                *o /= sum;
            }
        }
        drop(xv);
        let y = Tensor::output(x.shape().to_vec(), out, x.tracked());
        if y.tracked() {
            let (x, y2) = (x.clone(), y.clone());
            self.record(
                &y,
                Box::new(move || {
                    let dy = y2.grad();
                    let yv = y2.data();
                    let mut dx = x.0.grad.borrow_mut();
                    for i in 0..r {
                        let mut dot = 0.0;
                        for j in 0..c {
                            dot += dy[i * c + j] * yv[i * c + j];
                        }
                        for j in 0..c {
                            dx[i * c + j] += yv[i * c + j] * (dy[i * c + j] - dot);
                        }
                    }
                }),
            );
        }
        Ok(y)
    }

    /// Column-wise concatenation of equal-row tensors.
    pub fn concat_cols(&self, xs: &[&Tensor]) -> Result<Tensor> {
        assert!(!xs.is_empty(), "concat_cols of nothing");
        let r = xs[0].dims2().0;
        let mut widths = Vec::with_capacity(xs.len());
        for x in xs {
            let (ri, ci) = x.dims2();
            if ri != r {
                return Err(Error::ShapeMismatch {
                    op: "concat_cols",
                    lhs: xs[0].shape().to_vec(),
                    rhs: x.shape().to_vec(),
                });
            }
            widths.push(ci);
        }
        let total: usize = widths.iter().sum();
        let mut out = vec![0.0; r * total];
        let mut offset = 0;
        for (x, &w) in xs.iter().zip(&widths) {
            let xv = x.data();
            for i in 0..r {
                out[i * total + offset..i * total + offset + w]
                    .copy_from_slice(&xv[i * w..(i + 1) * w]);
            }
            offset += w;
        }
        let tracked = xs.iter().any(|x| x.tracked());
        let y = Tensor::output(vec![r, total], out, tracked);
        if tracked {
            let xs: Vec<Tensor> = xs.iter().map(|x| (*x).clone()).collect();
            let y2 = y.clone();
            self.record(
                &y,
                Box::new(move || {
                    let dy = y2.grad();
                    let mut offset = 0;
                    for (x, &w) in xs.iter().zip(&widths) {
                        if x.tracked() {
                            let mut dx = x.0.grad.borrow_mut();
                            for i in 0..r {
                                for j in 0..w {
                                    dx[i * w + j] += dy[i * total + offset + j];
                                }
                            }
                        }
                        offset += w;
                    }
                }),
            );
        }
        Ok(y)
    }

    /// Contiguous column slice `[r, len]` starting at `start`.
    pub fn slice_cols(&self, x: &Tensor, start: usize, len: usize) -> Result<Tensor> {
        let (r, c) = x.dims2();
        if start + len > c {
            return Err(Error::IndexOutOfRange { index: start + len, len: c });
        }
        let xv = x.data();
        let mut out = vec![0.0; r * len];
        for i in 0..r {
            out[i * len..(i + 1) * len].copy_from_slice(&xv[i * c + start..i * c + start + len]);
        }
        drop(xv);
        let y = Tensor::output(vec![r, len], out, x.tracked());
        if y.tracked() {
            let (x, y2) = (x.clone(), y.clone());
            self.record(
                &y,
                Box::new(move || {
                    let dy = y2.grad();
                    let mut dx = x.0.grad.borrow_mut();
                    for i in 0..r {
                        for j in 0..len {
                            dx[i * c + start + j] += dy[i * len + j];
                        }
                    }
                }),
            );
        }
        Ok(y)
    }

    /// Per-row dot product `[r,c] . [r,c] -> [r,1]`.
    pub fn rowdot(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        if a.shape() != b.shape() {
            return Err(Error::ShapeMismatch {
                op: "rowdot",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let (r, c) = a.dims2();
        let av = a.data();
        let bv = b.data();
        let mut out = vec![0.0; r];
        for i in 0..r {
            let mut s = 0.0;
            for j in 0..c {
                s += av[i * c + j] * bv[i * c + j];
            }
            out[i] = s;
        }
        drop(av);
        drop(bv);
        let y = Tensor::output(vec![r, 1], out, a.tracked() || b.tracked());
        if y.tracked() {
            let (a, b, y2) = (a.clone(), b.clone(), y.clone());
            self.record(
                &y,
                Box::new(move || {
                    let dy = y2.grad();
                    if a.tracked() {
                        let bv = b.data();
                        let mut da = a.0.grad.borrow_mut();
                        for i in 0..r {
                            for j in 0..c {
                                da[i * c + j] += dy[i] * bv[i * c + j];
                            }
                        }
                    }
                    if b.tracked() {
                        let av = a.data();
                        let mut db = b.0.grad.borrow_mut();
                        for i in 0..r {
                            for j in 0..c {
                                db[i * c + j] += dy[i] * av[i * c + j];
                            }
                        }
                    }
                }),
            );
        }
        Ok(y)
    }

    /// Scale row `i` of `x` by `s[i]`; `s` is `[r,1]` or `[r]`.
    pub fn scale_rows(&self, x: &Tensor, s: &Tensor) -> Result<Tensor> {
        let (r, c) = x.dims2();
        let (rs, cs) = s.dims2();
        let s_len_ok = (rs == r && cs == 1) || (s.shape().len() == 1 && s.len() == r);
        if !s_len_ok {
            return Err(Error::ShapeMismatch {
                op: "scale_rows",
                lhs: x.shape().to_vec(),
                rhs: s.shape().to_vec(),
            });
        }
        let xv = x.data();
        let sv = s.data();
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[i * c + j] = xv[i * c + j] * sv[i];
            }
        }
        drop(xv);
        drop(sv);
        let y = Tensor::output(x.shape().to_vec(), out, x.tracked() || s.tracked());
        if y.tracked() {
            let (x, s, y2) = (x.clone(), s.clone(), y.clone());
            self.record(
                &y,
                Box::new(move || {
                    let dy = y2.grad();
                    if x.tracked() {
                        let sv = s.data();
                        let mut dx = x.0.grad.borrow_mut();
                        for i in 0..r {
                            for j in 0..c {
                                dx[i * c + j] += dy[i * c + j] * sv[i];
                            }
                        }
                    }
                    if s.tracked() {
                        let xv = x.data();
                        let mut ds = s.0.grad.borrow_mut();
                        for i in 0..r {
                            let mut acc = 0.0;
                            for j in 0..c {
                                acc += dy[i * c + j] * xv[i * c + j];
                            }
                            ds[i] += acc;
                        }
                    }
                }),
            );
        }
        Ok(y)
    }

    /// Multiply every element by a constant.
    pub fn scale(&self, x: &Tensor, k: f64) -> Tensor {
        let out: Vec<f64> = x.data().iter().map(|&v| v * k).collect();
        let y = Tensor::output(x.shape().to_vec(), out, x.tracked());
        if y.tracked() {
            let (x, y2) = (x.clone(), y.clone());
            self.record(
                &y,
                Box::new(move || {
                    let dy = y2.grad();
                    let mut dx = x.0.grad.borrow_mut();
                    for i in 0..dx.len() {
                        dx[i] += k * dy[i];
                    }
                }),
            );
        }
        y
    }

    /// Sum of all elements, as a `[1]` scalar.
    pub fn sum(&self, x: &Tensor) -> Tensor {
        let total: f64 = x.data().iter().sum();
        let y = Tensor::output(vec![1], vec![total], x.tracked());
        if y.tracked() {
            let (x, y2) = (x.clone(), y.clone());
            self.record(
                &y,
                Box::new(move || {
                    let d = y2.grad()[0];
                    let mut dx = x.0.grad.borrow_mut();
                    for g in dx.iter_mut() {
                        *g += d;
                    }
                }),
            );
        }
        y
    }

    /// Mean over all elements.
    pub fn mean(&self, x: &Tensor) -> Tensor {
        let n = x.len() as f64;
        let s = self.sum(x);
        self.scale(&s, 1.0 / n)
    }
}
