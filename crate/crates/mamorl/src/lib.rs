//! Multi-agent multi-objective actor-critic learning.
//!
//! Two training frameworks over vector-valued rewards: a global-preference
//! variant whose actors and critics condition on every agent's preference
//! vector, and an agent-attention variant whose centralized critic mixes
//! per-agent (observation, action, preference) embeddings through shared
//! multi-head self-attention. Everything runs on a small built-in
//! reverse-mode autodiff engine over `f64` tensors.
//!
//! The crate ships:
//!
//! - [`autodiff`] — tape, tensor ops, Adam, finite-difference checking;
//! - [`env`] — continuous 2-D multi-objective particle worlds
//!   (`spread`, `tag`) plus an analytically solvable `diagnostic` world;
//! - [`prefs`] — simplex preference vectors, uniform sampling, and frozen
//!   observation-to-preference generators;
//! - [`nets`] — actors, the global-preference critic, and the
//!   agent-attention critic, with checkpointing;
//! - [`train`] — replay, exploration noise, GPI action selection,
//!   vector TD updates, and the full training loops;
//! - [`metrics`] — global utility, Pareto filtering, exact and
//!   Monte-Carlo hypervolume;
//! - [`harness`] — experiment configs, variant x seed grids, CSV output,
//!   and the CLI entry point.
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability, starting with `autodiff_basics` and `train_diagnostic`.

pub mod autodiff;
pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nets;
pub mod prefs;
pub mod train;

pub use error::{Error, Result};

/// Derive an independent sub-seed from a master seed and a stream index
/// (splitmix64 finalizer). Used everywhere two RNG streams must not collide.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
