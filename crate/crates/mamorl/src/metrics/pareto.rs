//! Non-dominated filtering and hypervolume under the maximization
//! convention: `p` dominates `q` iff `p >= q` componentwise and `p != q`.

use rand::Rng;

use crate::error::{Error, Result};

pub fn dominates(p: &[f64], q: &[f64]) -> bool {
    debug_assert_eq!(p.len(), q.len());
    p.iter().zip(q).all(|(a, b)| a >= b) && p != q
}

/// Maximal elements under componentwise dominance; duplicates collapse
/// to one; canonical order is lexicographic descending.
pub fn pareto_filter(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if points.iter().any(|q| dominates(q, p)) {
            continue;
        }
        if kept.contains(p) {
            continue;
        }
        kept.push(p.clone());
    }
    kept.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b) {
            match y.total_cmp(x) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    });
    kept
}

/// A mutually non-dominated point set with a reference point every
/// member strictly dominates (points failing that are dropped on
/// construction).
#[derive(Clone, Debug)]
pub struct ParetoFront {
    pub points: Vec<Vec<f64>>,
    pub reference: Vec<f64>,
}

impl ParetoFront {
    pub fn new(points: Vec<Vec<f64>>, reference: Vec<f64>) -> Result<Self> {
        let m = reference.len();
        if m == 0 {
            return Err(Error::Config("reference point needs at least one dimension".into()));
        }
        for p in &points {
            if p.len() != m {
                return Err(Error::ShapeMismatch {
                    op: "pareto_front",
                    lhs: vec![m],
                    rhs: vec![p.len()],
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericInput { op: "pareto_front" });
            }
        }
        let dominated_ref: Vec<Vec<f64>> = points
            .into_iter()
            .filter(|p| p.iter().zip(&reference).all(|(a, r)| a > r))
            .collect();
        Ok(ParetoFront { points: pareto_filter(&dominated_ref), reference })
    }

    /// Reference rule for evaluation sweeps: componentwise minimum minus
    /// 10% of the componentwise range (at least a small epsilon so every
    /// point strictly dominates it).
    pub fn from_sweep_points(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("cannot build a front from zero points".into()));
        }
        let m = points[0].len();
        let mut reference = Vec::with_capacity(m);
        for j in 0..m {
            let min = points.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
            let max = points.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
            reference.push(min - f64::max(0.1 * (max - min), 1e-9));
        }
        ParetoFront::new(points, reference)
    }

    pub fn m(&self) -> usize {
        self.reference.len()
    }
}

/// Exact hypervolume for 2 or 3 objectives.
///
/// m = 2: rectangle strips over points sorted by the first coordinate
/// descending. m = 3: sweep slabs over the third coordinate, each slab
/// contributing its 2-D hypervolume times its depth.
pub fn hypervolume_exact(front: &ParetoFront) -> Result<f64> {
    match front.m() {
        2 => Ok(hv2(&front.points, &front.reference)),
        3 => Ok(hv3(&front.points, &front.reference)),
        m => Err(Error::UnsupportedDimension(m)),
    }
}

fn hv2(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let mut pts: Vec<&Vec<f64>> = points.iter().collect();
    pts.sort_by(|a, b| b[0].total_cmp(&a[0]));
    let mut total = 0.0;
    let mut prev_y = reference[1];
    for p in pts {
        if p[1] > prev_y {
            total += (p[0] - reference[0]) * (p[1] - prev_y);
            prev_y = p[1];
        }
    }
    total
}

fn hv3(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let mut pts: Vec<&Vec<f64>> = points.iter().collect();
    pts.sort_by(|a, b| b[2].total_cmp(&a[2]));
    let mut total = 0.0;
    for (k, p) in pts.iter().enumerate() {
        let z_low = if k + 1 < pts.len() { pts[k + 1][2] } else { reference[2] };
        let depth = p[2] - z_low;
        if depth <= 0.0 {
            continue;
        }
        let slab: Vec<Vec<f64>> = pts[..=k].iter().map(|q| vec![q[0], q[1]]).collect();
        total += hv2(&pareto_filter(&slab), &reference[..2]) * depth;
    }
    total
}

/// Monte-Carlo hypervolume over the bounding box
/// `[reference, componentwise max of the front]`. Returns the estimate
/// and its binomial standard error; a degenerate box gives `(0, 0)`.
pub fn hypervolume_mc(
    front: &ParetoFront,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<(f64, f64)> {
    if n_samples < 10_000 {
        return Err(Error::Config(format!(
            "Monte-Carlo hypervolume needs >= 10^4 samples, got {n_samples}"
        )));
    }
    let m = front.m();
    if front.points.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut hi = vec![f64::NEG_INFINITY; m];
    for p in &front.points {
        for j in 0..m {
            hi[j] = hi[j].max(p[j]);
        }
    }
    let mut volume = 1.0;
    for j in 0..m {
        volume *= hi[j] - front.reference[j];
    }
    if volume <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut hits = 0usize;
    let mut sample = vec![0.0; m];
    for _ in 0..n_samples {
        for j in 0..m {
            sample[j] = rng.gen_range(front.reference[j]..hi[j]);
        }
        if front
            .points
            .iter()
            .any(|p| sample.iter().zip(p).all(|(s, v)| s <= v))
        {
            hits += 1;
        }
    }
    let p_hat = hits as f64 / n_samples as f64;
    let estimate = volume * p_hat;
    let std_error = volume * (p_hat * (1.0 - p_hat) / n_samples as f64).sqrt();
    Ok((estimate, std_error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    /// Reference implementation: quadratic pairwise dominance scan.
    pub(super) fn brute_force_filter(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for (i, p) in points.iter().enumerate() {
            let mut maximal = true;
            for (j, q) in points.iter().enumerate() {
                if i != j && dominates(q, p) {
                    maximal = false;
                    break;
                }
            }
            if maximal && !out.contains(p) {
                out.push(p.clone());
            }
        }
        out.sort_by(|a, b| {
            for (x, y) in a.iter().zip(b) {
                match y.total_cmp(x) {
                    std::cmp::Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            std::cmp::Ordering::Equal
        });
        out
    }

    #[test]
    fn hand_dominance_case() {
        let pts = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![0.0, 0.0]];
        let front = pareto_filter(&pts);
        assert_eq!(front, vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        let single = pareto_filter(&[vec![3.0, 4.0]]);
        assert_eq!(single, vec![vec![3.0, 4.0]]);
    }

    #[test]
    fn filter_matches_brute_force_on_random_sets() {
        let mut rng = StdRng::seed_from_u64(0);
        for m in [2, 3] {
            for _ in 0..50 {
                let pts: Vec<Vec<f64>> = (0..50)
                    .map(|_| (0..m).map(|_| (rng.gen_range(-5.0..5.0_f64) * 4.0).round() / 4.0).collect())
                    .collect();
                assert_eq!(pareto_filter(&pts), brute_force_filter(&pts));
            }
        }
    }

    #[test]
    fn filter_is_idempotent() {
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..20 {
            let pts: Vec<Vec<f64>> = (0..30)
                .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect();
            let once = pareto_filter(&pts);
            assert_eq!(pareto_filter(&once), once);
        }
    }

    #[test]
    fn unit_square_and_two_rectangles() {
        let f1 = ParetoFront::new(vec![vec![1.0, 1.0]], vec![0.0, 0.0]).unwrap();
        assert_eq!(hypervolume_exact(&f1).unwrap(), 1.0);
        let f2 = ParetoFront::new(vec![vec![2.0, 1.0], vec![1.0, 2.0]], vec![0.0, 0.0]).unwrap();
        assert_eq!(hypervolume_exact(&f2).unwrap(), 3.0);
    }

    #[test]
    fn three_dimensional_hand_cases() {
        let cube = ParetoFront::new(vec![vec![1.0, 1.0, 1.0]], vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!(hypervolume_exact(&cube).unwrap(), 1.0);
        // Two unit-ish boxes overlapping in a 1x1x1 core:
        // (2,1,1) and (1,1,2) vs ref 0 -> 2 + 2 - 1 = 3.
        let f = ParetoFront::new(
            vec![vec![2.0, 1.0, 1.0], vec![1.0, 1.0, 2.0]],
            vec![0.0, 0.0, 0.0],
        )
        .unwrap();
        assert_eq!(hypervolume_exact(&f).unwrap(), 3.0);
    }

    #[test]
    fn dominated_points_do_not_change_hypervolume() {
        let base = ParetoFront::new(
            vec![vec![2.0, 1.0], vec![1.0, 2.0]],
            vec![0.0, 0.0],
        )
        .unwrap();
        let with_dominated = ParetoFront::new(
            vec![vec![2.0, 1.0], vec![1.0, 2.0], vec![0.5, 0.5]],
            vec![0.0, 0.0],
        )
        .unwrap();
        assert_eq!(
            hypervolume_exact(&base).unwrap(),
            hypervolume_exact(&with_dominated).unwrap()
        );
        assert_eq!(with_dominated.points.len(), 2);
    }

    #[test]
    fn reference_shift_changes_volume_by_slab() {
        // Shifting ref down by delta in coordinate 1 adds
        // delta * (max x extent) for a 2-point staircase front.
        let f = ParetoFront::new(vec![vec![2.0, 1.0], vec![1.0, 2.0]], vec![0.0, 0.0]).unwrap();
        let delta = 0.25;
        let shifted =
            ParetoFront::new(vec![vec![2.0, 1.0], vec![1.0, 2.0]], vec![0.0, -delta]).unwrap();
        let gain = hypervolume_exact(&shifted).unwrap() - hypervolume_exact(&f).unwrap();
        assert!((gain - delta * 2.0).abs() < 1e-12);
    }

    #[test]
    fn adding_a_point_never_decreases_hypervolume() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..40 {
            let pts: Vec<Vec<f64>> = (0..6)
                .map(|_| vec![rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0)])
                .collect();
            let f = ParetoFront::new(pts.clone(), vec![0.0, 0.0]).unwrap();
            let hv = hypervolume_exact(&f).unwrap();
            let mut more = pts;
            more.push(vec![rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0)]);
            let f2 = ParetoFront::new(more, vec![0.0, 0.0]).unwrap();
            assert!(hypervolume_exact(&f2).unwrap() >= hv - 1e-12);
        }
    }

    #[test]
    fn exact_agrees_with_monte_carlo() {
        let mut rng = StdRng::seed_from_u64(4);
        for m in [2usize, 3] {
            for _ in 0..5 {
                let pts: Vec<Vec<f64>> = (0..8)
                    .map(|_| (0..m).map(|_| rng.gen_range(0.2..3.0)).collect())
                    .collect();
                let front = ParetoFront::new(pts, vec![0.0; m]).unwrap();
                let exact = hypervolume_exact(&front).unwrap();
                let (est, se) = hypervolume_mc(&front, 100_000, &mut rng).unwrap();
                assert!(
                    (exact - est).abs() <= 3.0 * se.max(1e-9),
                    "m={m}: exact {exact} vs mc {est} (se {se})"
                );
            }
        }
    }

    #[test]
    fn mc_on_unit_square_is_exact_and_error_shrinks() {
        let front = ParetoFront::new(vec![vec![1.0, 1.0]], vec![0.0, 0.0]).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let (est, se) = hypervolume_mc(&front, 1_000_000, &mut rng).unwrap();
        assert_eq!(est, 1.0, "every sample lands in the dominated box");
        assert_eq!(se, 0.0);

        // Standard error scales like 1/sqrt(n) on a partial-coverage front.
        let staircase =
            ParetoFront::new(vec![vec![2.0, 1.0], vec![1.0, 2.0]], vec![0.0, 0.0]).unwrap();
        let (_, se1) = hypervolume_mc(&staircase, 10_000, &mut rng).unwrap();
        let (_, se2) = hypervolume_mc(&staircase, 1_000_000, &mut rng).unwrap();
        let ratio = se1 / se2;
        assert!((ratio - 10.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn degenerate_box_returns_zero() {
        let front = ParetoFront {
            points: vec![vec![1.0, 1.0]],
            reference: vec![1.0, 0.0],
        };
        let mut rng = StdRng::seed_from_u64(6);
        assert_eq!(hypervolume_mc(&front, 10_000, &mut rng).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn high_dimension_directs_to_monte_carlo() {
        let front = ParetoFront::new(vec![vec![1.0; 4]], vec![0.0; 4]).unwrap();
        let err = hypervolume_exact(&front).unwrap_err();
        assert!(err.to_string().contains("Monte-Carlo"), "{err}");
    }
}
