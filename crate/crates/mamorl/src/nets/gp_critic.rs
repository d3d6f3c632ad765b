//! Centralized vector-valued critic MLP.
//!
//! One instance per agent. The global-preference variant consumes
//! `concat(state, all actions, flattened preferences)`; the same struct
//! also serves the local-information ablation (inputs `(o_i, a_i, w_i)`)
//! and the scalarized baseline (`out_dim = 1`).

use rand::Rng;

use super::{Linear, NetDims};
use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};

pub struct GpCritic {
    l1: Linear,
    l2: Linear,
    out: Linear,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl GpCritic {
    pub fn init(rng: &mut impl Rng, in_dim: usize, out_dim: usize, dims: &NetDims, name: &str) -> Self {
        GpCritic {
            l1: Linear::init(rng, in_dim, dims.critic_hidden1, &format!("{name}.l1")),
            l2: Linear::init(rng, dims.critic_hidden1, dims.critic_hidden2, &format!("{name}.l2")),
            out: Linear::init(rng, dims.critic_hidden2, out_dim, &format!("{name}.out")),
            in_dim,
            out_dim,
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize, dims: &NetDims, name: &str) -> Self {
        GpCritic {
            l1: Linear::zeros(in_dim, dims.critic_hidden1, &format!("{name}.l1")),
            l2: Linear::zeros(dims.critic_hidden1, dims.critic_hidden2, &format!("{name}.l2")),
            out: Linear::zeros(dims.critic_hidden2, out_dim, &format!("{name}.out")),
            in_dim,
            out_dim,
        }
    }

    /// `input` is the already-concatenated `[batch, in_dim]` row block.
    pub fn forward(&self, tape: &Tape, input: &Tensor) -> Result<Tensor> {
        if input.shape().last() != Some(&self.in_dim) {
            return Err(Error::ShapeMismatch {
                op: "gp_critic_forward",
                lhs: vec![self.in_dim],
                rhs: input.shape().to_vec(),
            });
        }
        let h1 = tape.relu(&self.l1.forward(tape, input)?);
        let h2 = tape.relu(&self.l2.forward(tape, &h1)?);
        self.out.forward(tape, &h2)
    }

    /// Single-row forward, values only.
    pub fn eval(&self, input: &[f64]) -> Result<Vec<f64>> {
        let tape = Tape::new();
        let x = Tensor::constant(vec![1, input.len()], input.to_vec());
        Ok(self.forward(&tape, &x)?.to_vec())
    }

    pub fn params(&self) -> Vec<Tensor> {
        let mut p = self.l1.params();
        p.extend(self.l2.params());
        p.extend(self.out.params());
        p
    }

    pub fn clone_as_target(&self) -> GpCritic {
        GpCritic {
            l1: self.l1.clone_as_target(),
            l2: self.l2.clone_as_target(),
            out: self.out.clone_as_target(),
            in_dim: self.in_dim,
            out_dim: self.out_dim,
        }
    }
}
