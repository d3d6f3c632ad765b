//! Deterministic tanh-bounded policy network.

use rand::Rng;

use super::{Linear, NetDims, NormParams};
use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};

/// `obs (+ flattened global preference) -> h1 -> h2 -> action`, LayerNorm
/// and ReLU after each hidden layer, tanh on the output. A global-
/// preference actor is built with `pref_dim = N * M`; an observation-only
/// actor with `pref_dim = 0`.
pub struct Actor {
    l1: Linear,
    n1: NormParams,
    l2: Linear,
    n2: NormParams,
    out: Linear,
    pub obs_dim: usize,
    pub pref_dim: usize,
    pub action_dim: usize,
}

impl Actor {
    pub fn init(
        rng: &mut impl Rng,
        obs_dim: usize,
        pref_dim: usize,
        action_dim: usize,
        dims: &NetDims,
        name: &str,
    ) -> Self {
        let in_dim = obs_dim + pref_dim;
        Actor {
            l1: Linear::init(rng, in_dim, dims.actor_hidden1, &format!("{name}.l1")),
            n1: NormParams::init(dims.actor_hidden1, &format!("{name}.n1")),
            l2: Linear::init(rng, dims.actor_hidden1, dims.actor_hidden2, &format!("{name}.l2")),
            n2: NormParams::init(dims.actor_hidden2, &format!("{name}.n2")),
            out: Linear::init(rng, dims.actor_hidden2, action_dim, &format!("{name}.out")),
            obs_dim,
            pref_dim,
            action_dim,
        }
    }

    /// All-zero weights; the forward pass then returns tanh(0) = 0.
    pub fn zeros(obs_dim: usize, pref_dim: usize, action_dim: usize, dims: &NetDims, name: &str) -> Self {
        Actor {
            l1: Linear::zeros(obs_dim + pref_dim, dims.actor_hidden1, &format!("{name}.l1")),
            n1: NormParams::init(dims.actor_hidden1, &format!("{name}.n1")),
            l2: Linear::zeros(dims.actor_hidden1, dims.actor_hidden2, &format!("{name}.l2")),
            n2: NormParams::init(dims.actor_hidden2, &format!("{name}.n2")),
            out: Linear::zeros(dims.actor_hidden2, action_dim, &format!("{name}.out")),
            obs_dim,
            pref_dim,
            action_dim,
        }
    }

    /// Batched forward. `w` carries the flattened global preference and
    /// must be present exactly when the actor was built with one.
    pub fn forward(&self, tape: &Tape, obs: &Tensor, w: Option<&Tensor>) -> Result<Tensor> {
        let x = match (self.pref_dim, w) {
            (0, None) => obs.clone(),
            (0, Some(_)) => {
                return Err(Error::CaseMismatch(
                    "observation-only actor given a global preference",
                ))
            }
            (_, None) => {
                return Err(Error::CaseMismatch(
                    "global-preference actor called without one",
                ))
            }
            (p, Some(w)) => {
                if w.shape().last() != Some(&p) {
                    return Err(Error::ShapeMismatch {
                        op: "actor_forward",
                        lhs: vec![p],
                        rhs: w.shape().to_vec(),
                    });
                }
                tape.concat_cols(&[obs, w])?
            }
        };
        let h1 = self.n1.forward(tape, &self.l1.forward(tape, &x)?)?;
        let h1 = tape.relu(&h1);
        let h2 = self.n2.forward(tape, &self.l2.forward(tape, &h1)?)?;
        let h2 = tape.relu(&h2);
        Ok(tape.tanh(&self.out.forward(tape, &h2)?))
    }

    /// Single-observation greedy action, values only.
    pub fn act(&self, obs: &[f64], w_flat: Option<&[f64]>) -> Result<Vec<f64>> {
        let tape = Tape::new();
        let o = Tensor::constant(vec![1, obs.len()], obs.to_vec());
        let w = w_flat.map(|w| Tensor::constant(vec![1, w.len()], w.to_vec()));
        Ok(self.forward(&tape, &o, w.as_ref())?.to_vec())
    }

    pub fn params(&self) -> Vec<Tensor> {
        let mut p = self.l1.params();
        p.extend(self.n1.params());
        p.extend(self.l2.params());
        p.extend(self.n2.params());
        p.extend(self.out.params());
        p
    }

    pub fn clone_as_target(&self) -> Actor {
        Actor {
            l1: self.l1.clone_as_target(),
            n1: self.n1.clone_as_target(),
            l2: self.l2.clone_as_target(),
            n2: self.n2.clone_as_target(),
            out: self.out.clone_as_target(),
            obs_dim: self.obs_dim,
            pref_dim: self.pref_dim,
            action_dim: self.action_dim,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::finite_difference_check;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn zero_actor_outputs_zero_action() {
        let actor = Actor::zeros(6, 0, 2, &NetDims::default(), "a");
        let act = actor.act(&[0.4, -0.2, 1.0, 0.0, 0.3, -0.9], None).unwrap();
        assert_eq!(act, vec![0.0, 0.0]);
    }

    #[test]
    fn actions_stay_inside_the_open_unit_box() {
        let mut rng = StdRng::seed_from_u64(8);
        let dims = NetDims { actor_hidden1: 16, actor_hidden2: 16, ..NetDims::default() };
        let actor = Actor::init(&mut rng, 5, 0, 2, &dims, "a");
        for _ in 0..1000 {
            let obs: Vec<f64> = (0..5).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let a = actor.act(&obs, None).unwrap();
            assert!(a.iter().all(|v| v.abs() < 1.0));
        }
    }

    #[test]
    fn case_mismatch_is_rejected_both_ways() {
        let mut rng = StdRng::seed_from_u64(9);
        let dims = NetDims { actor_hidden1: 8, actor_hidden2: 8, ..NetDims::default() };
        let with_w = Actor::init(&mut rng, 4, 4, 2, &dims, "a");
        let without = Actor::init(&mut rng, 4, 0, 2, &dims, "b");
        assert!(matches!(with_w.act(&[0.0; 4], None), Err(Error::CaseMismatch(_))));
        assert!(matches!(
            without.act(&[0.0; 4], Some(&[0.5, 0.5, 0.5, 0.5])),
            Err(Error::CaseMismatch(_))
        ));
    }

    #[test]
    fn actor_gradient_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(10);
        let dims = NetDims { actor_hidden1: 8, actor_hidden2: 10, ..NetDims::default() };
        let actor = Actor::init(&mut rng, 4, 2, 2, &dims, "a");
        let obs = Tensor::constant(vec![3, 4], (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let w = Tensor::constant(vec![3, 2], vec![0.3, 0.7, 0.5, 0.5, 0.9, 0.1]);
        let probe = Tensor::constant(vec![3, 2], (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect());
        for p in actor.params() {
            let err = finite_difference_check(
                |tape| {
                    let a = actor.forward(tape, &obs, Some(&w))?;
                    let s = tape.mul(&a, &probe)?;
                    Ok(tape.sum(&s))
                },
                &p,
                1e-6,
            )
            .unwrap();
            assert!(err < 1e-5, "param {} fd error {err}", p.name());
        }
    }

    #[test]
    fn target_clone_is_frozen_and_independent() {
        let mut rng = StdRng::seed_from_u64(11);
        let dims = NetDims { actor_hidden1: 8, actor_hidden2: 8, ..NetDims::default() };
        let actor = Actor::init(&mut rng, 3, 0, 2, &dims, "a");
        let target = actor.clone_as_target();
        let obs = vec![0.1, -0.5, 0.8];
        assert_eq!(actor.act(&obs, None).unwrap(), target.act(&obs, None).unwrap());

        // One optimizer step on the source leaves the target untouched.
        use crate::autodiff::{adam_step, AdamState, Tape};
        let tape = Tape::new();
        let o = Tensor::constant(vec![1, 3], obs.clone());
        let a = actor.forward(&tape, &o, None).unwrap();
        let loss = tape.sum(&a);
        tape.backward(&loss).unwrap();
        let before = target.act(&obs, None).unwrap();
        for p in actor.params() {
            let mut st = AdamState::new(p.len());
            adam_step(&p, &mut st, 0.05).unwrap();
        }
        assert_eq!(before, target.act(&obs, None).unwrap());
        assert_ne!(before, actor.act(&obs, None).unwrap());
    }
}
