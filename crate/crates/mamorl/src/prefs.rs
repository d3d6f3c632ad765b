//! Preference vectors on the probability simplex and their generators.
//!
//! Two regimes: preferences drawn uniformly at random on the simplex
//! (one draw per agent per episode), and preferences produced each step
//! by a frozen deterministic map from the agent's observation,
//! `w = softmax(A o + b)`.

use rand::Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::derive_seed;
use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-9;

/// Point on the (M-1)-simplex: non-negative weights summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct PreferenceVector {
    weights: Vec<f64>,
}

impl PreferenceVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Config("preference needs at least one weight".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!(
                "preference weights must be finite and non-negative: {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Config(format!(
                "preference weights must sum to 1 (got {sum})"
            )));
        }
        Ok(PreferenceVector { weights })
    }

    pub fn uniform(m: usize) -> Self {
        PreferenceVector { weights: vec![1.0 / m as f64; m] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Dot product with an m-vector of values.
    pub fn scalarize(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.weights.len() {
            return Err(Error::ShapeMismatch {
                op: "scalarize",
                lhs: vec![self.weights.len()],
                rhs: vec![values.len()],
            });
        }
        Ok(self.weights.iter().zip(values).map(|(w, v)| w * v).sum())
    }
}

/// One preference vector per agent, in agent order.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalPreference {
    prefs: Vec<PreferenceVector>,
}

impl GlobalPreference {
    pub fn new(prefs: Vec<PreferenceVector>) -> Self {
        GlobalPreference { prefs }
    }

    pub fn agent(&self, i: usize) -> &PreferenceVector {
        &self.prefs[i]
    }

    pub fn n_agents(&self) -> usize {
        self.prefs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PreferenceVector> {
        self.prefs.iter()
    }

    /// All weights concatenated in agent order (actor / critic input).
    pub fn flatten(&self) -> Vec<f64> {
        self.prefs.iter().flat_map(|p| p.weights().iter().copied()).collect()
    }
}

/// Exact uniform draw on the (m-1)-simplex via normalized exponential
/// spacings.
pub fn sample_uniform_simplex(rng: &mut impl Rng, m: usize) -> Result<PreferenceVector> {
    if m == 0 {
        return Err(Error::Config("simplex dimension must be >= 1".into()));
    }
    if m == 1 {
        return Ok(PreferenceVector { weights: vec![1.0] });
    }
    loop {
        let gaps: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let sum: f64 = gaps.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            return Ok(PreferenceVector {
                weights: gaps.into_iter().map(|g| g / sum).collect(),
            });
        }
    }
}

/// Frozen affine-softmax map from observations to preference vectors.
///
/// Deterministic by construction: the same observation always maps to
/// the same preference, and the map stays fixed for the whole experiment.
#[derive(Clone, Debug)]
pub struct PreferenceGenerator {
    pub agent_index: usize,
    /// Row-major M x obs_dim.
    matrix: Vec<f64>,
    bias: Vec<f64>,
    m: usize,
    obs_dim: usize,
}

impl PreferenceGenerator {
    pub fn new(agent_index: usize, matrix: Vec<f64>, bias: Vec<f64>, m: usize, obs_dim: usize) -> Result<Self> {
        if matrix.len() != m * obs_dim || bias.len() != m {
            return Err(Error::ShapeMismatch {
                op: "preference_generator",
                lhs: vec![m, obs_dim],
                rhs: vec![matrix.len(), bias.len()],
            });
        }
        Ok(PreferenceGenerator { agent_index, matrix, bias, m, obs_dim })
    }

    pub fn output_dim(&self) -> usize {
        self.m
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    /// `softmax(A o + b)`.
    pub fn generate(&self, observation: &[f64]) -> Result<PreferenceVector> {
        if observation.len() != self.obs_dim {
            return Err(Error::ShapeMismatch {
                op: "generate_from_observation",
                lhs: vec![self.m, self.obs_dim],
                rhs: vec![observation.len()],
            });
        }
        let mut logits = self.bias.clone();
        for (j, row) in logits.iter_mut().enumerate() {
            let a_row = &self.matrix[j * self.obs_dim..(j + 1) * self.obs_dim];
            for (a, o) in a_row.iter().zip(observation) {
                *row += a * o;
            }
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        for e in exps.iter_mut() {
            *e /= sum;
        }
        Ok(PreferenceVector { weights: exps })
    }

    /// Copy with the bias shifted by `log(target + eps)` per component;
    /// used by the evaluation sweep to steer observation-driven
    /// preferences toward a grid point.
    pub fn with_bias_toward(&self, target: &PreferenceVector) -> Result<Self> {
        if target.len() != self.m {
            return Err(Error::ShapeMismatch {
                op: "with_bias_toward",
                lhs: vec![self.m],
                rhs: vec![target.len()],
            });
        }
        let mut shifted = self.clone();
        for (b, w) in shifted.bias.iter_mut().zip(target.weights()) {
            *b += (w + 1e-8).ln();
        }
        Ok(shifted)
    }

    /// Largest observed amplification `|A d|_1 / |d|_2` over probes;
    /// a measured stand-in for the operator norm of the linear part.
    pub fn measured_operator_norm(&self, rng: &mut impl Rng, probes: usize) -> f64 {
        let mut best: f64 = 0.0;
        for _ in 0..probes {
            let d: Vec<f64> = (0..self.obs_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d2: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if d2 == 0.0 {
                continue;
            }
            let mut l1 = 0.0;
            for j in 0..self.m {
                let row = &self.matrix[j * self.obs_dim..(j + 1) * self.obs_dim];
                l1 += row.iter().zip(&d).map(|(a, x)| a * x).sum::<f64>().abs();
            }
            best = best.max(l1 / d2);
        }
        best
    }
}

/// One frozen generator per agent. Entries of A are drawn i.i.d.
/// `Normal(0, scale^2 / obs_dim)` from a per-agent stream of `seed`;
/// biases start at zero. Reuse the same seed across algorithm variants
/// so comparisons see identical preference structure.
pub fn build_generators(
    seed: u64,
    n_agents: usize,
    m: usize,
    obs_dim: usize,
    scale: f64,
) -> Result<Vec<PreferenceGenerator>> {
    if scale <= 0.0 {
        return Err(Error::Config("generator scale must be positive".into()));
    }
    if m == 0 || obs_dim == 0 {
        return Err(Error::Config("generator dims must be positive".into()));
    }
    let std = (scale * scale / obs_dim as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("valid normal");
    (0..n_agents)
        .map(|i| {
            let mut rng = rand::rngs::StdRng::seed_from_u64(derive_seed(seed, i as u64));
            let matrix: Vec<f64> = (0..m * obs_dim).map(|_| normal.sample(&mut rng)).collect();
            PreferenceGenerator::new(i, matrix, vec![0.0; m], m, obs_dim)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;

    #[test]
    fn degenerate_simplex_is_always_one() {
        let mut rng = StdRng::seed_from_u64(0);
        for _ in 0..10 {
            let p = sample_uniform_simplex(&mut rng, 1).unwrap();
            assert_eq!(p.weights(), &[1.0]);
        }
    }

    #[test]
    fn samples_live_on_the_simplex() {
        let mut rng = StdRng::seed_from_u64(1);
        for m in [2, 3, 5] {
            for _ in 0..200 {
                let p = sample_uniform_simplex(&mut rng, m).unwrap();
                let sum: f64 = p.weights().iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
                assert!(p.weights().iter().all(|w| *w >= 0.0));
            }
        }
    }

    #[test]
    fn marginal_mean_matches_uniform_simplex() {
        // Uniform on the simplex has marginal mean 1/M per component.
        let mut rng = StdRng::seed_from_u64(2);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += sample_uniform_simplex(&mut rng, 2).unwrap().weights()[0];
        }
        let mean = acc / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn zero_map_gives_uniform_preference() {
        let g = PreferenceGenerator::new(0, vec![0.0; 2 * 4], vec![0.0; 2], 2, 4).unwrap();
        let p = g.generate(&[0.3, -0.7, 2.0, 0.0]).unwrap();
        assert!((p.weights()[0] - 0.5).abs() < 1e-15);
        assert!((p.weights()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn large_bias_saturates_component() {
        // softmax(10, 0) = (0.9999546, 0.0000454).
        let g = PreferenceGenerator::new(0, vec![0.0; 2 * 3], vec![10.0, 0.0], 2, 3).unwrap();
        let p = g.generate(&[1.0, 1.0, 1.0]).unwrap();
        assert!(p.weights()[0] > 0.999);
    }

    #[test]
    fn generator_is_pure() {
        let gens = build_generators(9, 1, 2, 6, 1.0).unwrap();
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..50 {
            let o: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let first = gens[0].generate(&o).unwrap();
            for _ in 0..20 {
                assert_eq!(first, gens[0].generate(&o).unwrap());
            }
        }
    }

    #[test]
    fn build_is_seed_deterministic_with_distinct_agents() {
        let a = build_generators(123, 2, 2, 5, 1.0).unwrap();
        let b = build_generators(123, 2, 2, 5, 1.0).unwrap();
        assert_eq!(a[0].matrix, b[0].matrix);
        assert_eq!(a[1].matrix, b[1].matrix);
        assert_ne!(a[0].matrix, a[1].matrix, "agents draw from distinct streams");
    }

    #[test]
    fn small_scale_keeps_preferences_near_uniform() {
        let gens = build_generators(5, 1, 2, 8, 1e-4).unwrap();
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..20 {
            let o: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = gens[0].generate(&o).unwrap();
            assert!((p.weights()[0] - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn generator_output_is_lipschitz_in_observation() {
        // |g(o + d) - g(o)|_1 <= 0.5 * |A d|_1 <= 0.5 * |A|_measured * |d|_2
        // (softmax is 1/2-Lipschitz from logit 1-norm to probability 1-norm).
        let gens = build_generators(11, 1, 3, 6, 1.5).unwrap();
        let g = &gens[0];
        let mut rng = StdRng::seed_from_u64(7);
        let opnorm = g.measured_operator_norm(&mut rng.clone(), 2000);
        for _ in 0..200 {
            let o: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let delta: Vec<f64> = (0..6).map(|_| rng.gen_range(-1e-3..1e-3)).collect();
            let shifted: Vec<f64> = o.iter().zip(&delta).map(|(a, b)| a + b).collect();
            let p = g.generate(&o).unwrap();
            let q = g.generate(&shifted).unwrap();
            let l1: f64 = p
                .weights()
                .iter()
                .zip(q.weights())
                .map(|(a, b)| (a - b).abs())
                .sum();
            let d2: f64 = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(
                l1 <= 0.5 * opnorm * d2 + 1e-12,
                "l1 {l1} vs bound {}",
                0.5 * opnorm * d2
            );
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = PreferenceGenerator::new(0, vec![0.0; 2 * 4], vec![0.0; 2], 2, 4).unwrap();
        assert!(g.generate(&[1.0, 2.0]).is_err());
        assert!(sample_uniform_simplex(&mut StdRng::seed_from_u64(0), 0).is_err());
    }

    #[test]
    fn scalarize_is_a_convex_combination() {
        let w = PreferenceVector::new(vec![0.25, 0.75]).unwrap();
        let v = [2.0, 4.0];
        let s = w.scalarize(&v).unwrap();
        assert_eq!(s, 3.5);
        assert!(s >= 2.0 && s <= 4.0);
        assert!(w.scalarize(&[1.0]).is_err());
    }
}
