//! Training procedures: replay, exploration, vector TD targets with GPI,
//! per-agent critic and actor updates, soft target tracking, and the
//! episode loop for all four algorithm variants.

pub mod gpi;
mod learner;
mod noise;
mod replay;

pub use gpi::{gpi_select_action, CriticScore};
pub use learner::{
    gp_input_row, run_training, CentralizedScore, EpisodeLog, Learner, PrefCase, PrefSetup,
};
pub use noise::{exploration_noise, noise_sigma};
pub use replay::{ReplayBuffer, Transition};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::nets::NetDims;

/// Algorithm variants.
///
/// - `Gp`: global-preference actors and critics, per-episode random
///   preferences, GPI in the Bellman target;
/// - `Aa`: observation-only actors with the shared agent-attention critic;
/// - `Ip`: observation-only actors, each critic sees only the agent's own
///   `(o_i, a_i, w_i)` (ablation);
/// - `Scalarized`: observation-only actors with a centralized scalar
///   critic trained on preference-scalarized rewards.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Gp,
    Aa,
    Ip,
    Scalarized,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Gp => "gp",
            Variant::Aa => "aa",
            Variant::Ip => "ip",
            Variant::Scalarized => "scalarized",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gp" => Ok(Variant::Gp),
            "aa" => Ok(Variant::Aa),
            "ip" => Ok(Variant::Ip),
            "scalarized" => Ok(Variant::Scalarized),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }

    /// True for the global-preference case (actors consume W, preferences
    /// are resampled per episode).
    pub fn is_global_preference(&self) -> bool {
        matches!(self, Variant::Gp)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    /// Soft update rate tau.
    pub tau: f64,
    pub batch: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Candidate own-preferences sampled per GPI selection (the true
    /// preference is always included on top of these).
    pub gpi_candidates: usize,
    pub noise_sigma_start: f64,
    pub noise_sigma_end: f64,
    pub noise_decay_steps: usize,
    /// Gradient updates run every this many env steps once past warmup.
    pub update_every: usize,
    pub warmup_steps: usize,
    pub episodes: usize,
    pub buffer_capacity: usize,
    pub dims: NetDims,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.99,
            tau: 0.005,
            batch: 128,
            actor_lr: 5e-4,
            critic_lr: 3e-4,
            gpi_candidates: 32,
            noise_sigma_start: 0.3,
            noise_sigma_end: 0.02,
            noise_decay_steps: 10_000,
            update_every: 1,
            warmup_steps: 1000,
            episodes: 200,
            buffer_capacity: 500_000,
            dims: NetDims::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        if self.batch == 0 || self.batch > self.buffer_capacity {
            return Err(Error::Config(format!(
                "batch {} must be in 1..=buffer_capacity {}",
                self.batch, self.buffer_capacity
            )));
        }
        if self.update_every == 0 {
            return Err(Error::Config("update_every must be >= 1".into()));
        }
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be >= 1".into()));
        }
        for (name, v) in [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("noise_sigma_start", self.noise_sigma_start),
            ("noise_sigma_end", self.noise_sigma_end),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be a non-negative real")));
            }
        }
        self.dims.validate()
    }
}

/// Elementwise convex blend `target <- tau * online + (1 - tau) * target`
/// over two equally ordered parameter lists.
pub fn soft_update(online: &[Tensor], target: &[Tensor], tau: f64) -> Result<()> {
    if online.len() != target.len() {
        return Err(Error::ShapeMismatch {
            op: "soft_update",
            lhs: vec![online.len()],
            rhs: vec![target.len()],
        });
    }
    for (o, t) in online.iter().zip(target) {
        if o.shape() != t.shape() {
            return Err(Error::ShapeMismatch {
                op: "soft_update",
                lhs: o.shape().to_vec(),
                rhs: t.shape().to_vec(),
            });
        }
        let ov = o.data();
        let mut blended = t.to_vec();
        for (tv, &onl) in blended.iter_mut().zip(ov.iter()) {
            *tv = tau * onl + (1.0 - tau) * *tv;
        }
        t.set_values(&blended);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_update_endpoints() {
        let online = [Tensor::param(vec![3], vec![1.0, 2.0, 3.0], "o")];
        let target = [Tensor::param(vec![3], vec![-1.0, 0.0, 5.0], "t")];
        soft_update(&online, &target, 1.0).unwrap();
        assert_eq!(target[0].to_vec(), online[0].to_vec());

        let target2 = [Tensor::param(vec![3], vec![-1.0, 0.0, 5.0], "t")];
        soft_update(&online, &target2, 0.0).unwrap();
        assert_eq!(target2[0].to_vec(), vec![-1.0, 0.0, 5.0]);
    }

    #[test]
    fn repeated_soft_updates_converge_geometrically() {
        let tau = 0.25;
        let online = [Tensor::param(vec![2], vec![1.0, -2.0], "o")];
        let target = [Tensor::param(vec![2], vec![0.0, 0.0], "t")];
        let dist = |t: &Tensor| -> f64 {
            t.to_vec()
                .iter()
                .zip(online[0].to_vec())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let d0 = dist(&target[0]);
        for k in 1..=20 {
            soft_update(&online, &target, tau).unwrap();
            let expect = (1.0 - tau).powi(k) * d0;
            let got = dist(&target[0]);
            assert!(
                (got - expect).abs() <= 1e-10 * expect.max(1e-300),
                "k={k}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn soft_update_rejects_mismatched_shapes() {
        let online = [Tensor::param(vec![2], vec![1.0, 2.0], "o")];
        let target = [Tensor::param(vec![3], vec![0.0; 3], "t")];
        assert!(soft_update(&online, &target, 0.5).is_err());
    }

    #[test]
    fn config_ranges_are_enforced() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { gamma: 1.5, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { tau: 0.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { batch: 0, ..TrainConfig::default() }.validate().is_err());
        let too_big = TrainConfig { batch: 10, buffer_capacity: 5, ..TrainConfig::default() };
        assert!(too_big.validate().is_err());
    }
}
