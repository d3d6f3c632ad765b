//! Function approximators: deterministic actors, the global-preference
//! critic, and the agent-attention critic.

mod aa_critic;
mod actor;
mod checkpoint;
mod gp_critic;

pub use aa_critic::AaCritic;
pub use actor::Actor;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CKPT_MAGIC};
pub use gp_critic::GpCritic;

use rand::Rng;

use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};

/// Network widths. Defaults follow the reference architecture: actor
/// `obs -> 128 -> 256 -> act`, critic MLP `256 -> 256`, attention with
/// embedding 128 and 8 heads, FFN 128 -> 256 -> 128, per-agent Q output
/// `128 -> 512 -> 256 -> m`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetDims {
    pub actor_hidden1: usize,
    pub actor_hidden2: usize,
    pub critic_hidden1: usize,
    pub critic_hidden2: usize,
    pub embed_dim: usize,
    pub attn_heads: usize,
    pub ffn_hidden: usize,
    pub qhead_hidden1: usize,
    pub qhead_hidden2: usize,
    /// ReLU after the embedding layer (set false for a literal linear
    /// encoder).
    pub embed_relu: bool,
}

impl Default for NetDims {
    fn default() -> Self {
        NetDims {
            actor_hidden1: 128,
            actor_hidden2: 256,
            critic_hidden1: 256,
            critic_hidden2: 256,
            embed_dim: 128,
            attn_heads: 8,
            ffn_hidden: 256,
            qhead_hidden1: 512,
            qhead_hidden2: 256,
            embed_relu: true,
        }
    }
}

impl NetDims {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("actor_hidden1", self.actor_hidden1),
            ("actor_hidden2", self.actor_hidden2),
            ("critic_hidden1", self.critic_hidden1),
            ("critic_hidden2", self.critic_hidden2),
            ("embed_dim", self.embed_dim),
            ("attn_heads", self.attn_heads),
            ("ffn_hidden", self.ffn_hidden),
            ("qhead_hidden1", self.qhead_hidden1),
            ("qhead_hidden2", self.qhead_hidden2),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.actor_hidden1 < 2 || self.actor_hidden2 < 2 || self.embed_dim < 2 {
            return Err(Error::Config(
                "layer-normalized widths must be >= 2".into(),
            ));
        }
        if self.embed_dim % self.attn_heads != 0 {
            return Err(Error::Config(format!(
                "embed_dim {} must be divisible by attn_heads {}",
                self.embed_dim, self.attn_heads
            )));
        }
        Ok(())
    }

    /// Per-head width d_h = d / h, so h * d_h = d.
    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.attn_heads
    }
}

/// Affine layer `y = x W + b`, W is `[in, out]`.
#[derive(Clone)]
pub struct Linear {
    pub w: Tensor,
    pub b: Tensor,
}

impl Linear {
    pub fn init(rng: &mut impl Rng, in_dim: usize, out_dim: usize, name: &str) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let w: Vec<f64> = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Linear {
            w: Tensor::param(vec![in_dim, out_dim], w, &format!("{name}.w")),
            b: Tensor::param(vec![out_dim], vec![0.0; out_dim], &format!("{name}.b")),
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize, name: &str) -> Self {
        Linear {
            w: Tensor::param(vec![in_dim, out_dim], vec![0.0; in_dim * out_dim], &format!("{name}.w")),
            b: Tensor::param(vec![out_dim], vec![0.0; out_dim], &format!("{name}.b")),
        }
    }

    pub fn forward(&self, tape: &Tape, x: &Tensor) -> Result<Tensor> {
        let y = tape.matmul(x, &self.w)?;
        tape.add(&y, &self.b)
    }

    pub fn params(&self) -> Vec<Tensor> {
        vec![self.w.clone(), self.b.clone()]
    }

    pub fn clone_as_target(&self) -> Linear {
        Linear { w: self.w.deep_clone(true), b: self.b.deep_clone(true) }
    }

    pub fn in_dim(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn out_dim(&self) -> usize {
        self.w.shape()[1]
    }
}

/// LayerNorm affine parameters (gain starts at 1, bias at 0).
#[derive(Clone)]
pub struct NormParams {
    pub gain: Tensor,
    pub bias: Tensor,
}

impl NormParams {
    pub fn init(dim: usize, name: &str) -> Self {
        NormParams {
            gain: Tensor::param(vec![dim], vec![1.0; dim], &format!("{name}.gain")),
            bias: Tensor::param(vec![dim], vec![0.0; dim], &format!("{name}.bias")),
        }
    }

    pub fn forward(&self, tape: &Tape, x: &Tensor) -> Result<Tensor> {
        tape.layer_norm(x, &self.gain, &self.bias)
    }

    pub fn params(&self) -> Vec<Tensor> {
        vec![self.gain.clone(), self.bias.clone()]
    }

    pub fn clone_as_target(&self) -> NormParams {
        NormParams { gain: self.gain.deep_clone(true), bias: self.bias.deep_clone(true) }
    }
}

/// Copy values from `src` parameters into `dst` (shape-checked, in order).
pub fn copy_params(src: &[Tensor], dst: &[Tensor]) -> Result<()> {
    if src.len() != dst.len() {
        return Err(Error::ShapeMismatch {
            op: "copy_params",
            lhs: vec![src.len()],
            rhs: vec![dst.len()],
        });
    }
    for (s, d) in src.iter().zip(dst) {
        if s.shape() != d.shape() {
            return Err(Error::ShapeMismatch {
                op: "copy_params",
                lhs: s.shape().to_vec(),
                rhs: d.shape().to_vec(),
            });
        }
        d.set_values(&s.data());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn dims_validation() {
        assert!(NetDims::default().validate().is_ok());
        let bad = NetDims { embed_dim: 10, attn_heads: 4, ..NetDims::default() };
        assert!(bad.validate().is_err());
        assert_eq!(NetDims::default().head_dim(), 16);
    }

    #[test]
    fn linear_forward_shape_and_target_independence() {
        let mut rng = StdRng::seed_from_u64(1);
        let lin = Linear::init(&mut rng, 3, 4, "t");
        let tape = Tape::new();
        let x = Tensor::constant(vec![2, 3], vec![0.5; 6]);
        let y = lin.forward(&tape, &x).unwrap();
        assert_eq!(y.shape(), &[2, 4]);

        let target = lin.clone_as_target();
        assert_eq!(target.w.to_vec(), lin.w.to_vec());
        assert!(!target.w.requires_grad());
        lin.w.set_values(&vec![9.0; 12]);
        assert_ne!(target.w.to_vec(), lin.w.to_vec(), "deep copy is independent");
    }
}
