//! Annealed Gaussian exploration noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::TrainConfig;

/// Noise scale at a global env step: linear anneal from `sigma_start`
/// to `sigma_end` over `noise_decay_steps`, constant afterwards.
pub fn noise_sigma(step: usize, cfg: &TrainConfig) -> f64 {
    if cfg.noise_decay_steps == 0 || step >= cfg.noise_decay_steps {
        return cfg.noise_sigma_end;
    }
    let frac = step as f64 / cfg.noise_decay_steps as f64;
    cfg.noise_sigma_start + (cfg.noise_sigma_end - cfg.noise_sigma_start) * frac
}

/// Add i.i.d. Gaussian noise to each action component and clamp the
/// result to [-1, 1].
pub fn exploration_noise(
    action: &[f64],
    step: usize,
    cfg: &TrainConfig,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let sigma = noise_sigma(step, cfg);
    if sigma == 0.0 {
        return action.iter().map(|a| a.clamp(-1.0, 1.0)).collect();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma >= 0");
    action
        .iter()
        .map(|a| (a + normal.sample(rng)).clamp(-1.0, 1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn cfg() -> TrainConfig {
        TrainConfig {
            noise_sigma_start: 0.3,
            noise_sigma_end: 0.02,
            noise_decay_steps: 1000,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_sigma_leaves_action_unchanged() {
        let cfg = TrainConfig {
            noise_sigma_start: 0.0,
            noise_sigma_end: 0.0,
            ..cfg()
        };
        let mut rng = StdRng::seed_from_u64(0);
        let a = vec![0.4, -0.9];
        assert_eq!(exploration_noise(&a, 10, &cfg, &mut rng), a);
    }

    #[test]
    fn output_is_always_clamped() {
        let cfg = cfg();
        let mut rng = StdRng::seed_from_u64(1);
        for step in [0, 500, 5000] {
            for _ in 0..200 {
                let out = exploration_noise(&[0.99, -0.99], step, &cfg, &mut rng);
                assert!(out.iter().all(|v| (-1.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn sigma_reaches_end_value_after_decay() {
        let cfg = cfg();
        assert_eq!(noise_sigma(0, &cfg), 0.3);
        assert_eq!(noise_sigma(1000, &cfg), 0.02);
        assert_eq!(noise_sigma(10_000, &cfg), 0.02);
        let mid = noise_sigma(500, &cfg);
        assert!((mid - 0.16).abs() < 1e-12);

        // Measured std after decay within 10% of sigma_end.
        let mut rng = StdRng::seed_from_u64(2);
        let n = 10_000;
        let mut vals = Vec::with_capacity(n);
        for _ in 0..n {
            vals.push(exploration_noise(&[0.0], 2000, &cfg, &mut rng)[0]);
        }
        let mean: f64 = vals.iter().sum::<f64>() / n as f64;
        let var: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        assert!((std - 0.02).abs() / 0.02 < 0.10, "std {std}");
    }
}
