//! Finite-difference verification of every network's backward pass.
//!
//! Networks are built at reduced widths (the attention critic keeps its
//! 8 heads) so central differences over every parameter coordinate stay
//! cheap; the composed code paths are identical to the full-size ones.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::autodiff::{finite_difference_check, Tape, Tensor};
use crate::derive_seed;
use crate::error::Result;
use crate::nets::{AaCritic, Actor, GpCritic, NetDims};

pub struct GradCheckReport {
    pub network: String,
    pub max_rel_error: f64,
}

fn suite_dims() -> NetDims {
    NetDims {
        actor_hidden1: 12,
        actor_hidden2: 14,
        critic_hidden1: 20,
        critic_hidden2: 18,
        embed_dim: 32,
        attn_heads: 8,
        ffn_hidden: 16,
        qhead_hidden1: 16,
        qhead_hidden2: 12,
        embed_relu: true,
    }
}

fn rand_tensor(rng: &mut StdRng, rows: usize, cols: usize) -> Tensor {
    Tensor::constant(
        vec![rows, cols],
        (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
}

/// Run the finite-difference checks over `n_seeds` fresh random networks
/// and inputs. Returns the worst relative error per network.
pub fn gradient_suite(n_seeds: u64) -> Result<Vec<GradCheckReport>> {
    let dims = suite_dims();
    let mut worst = [0.0f64; 4];
    let names = ["actor", "gp_critic", "aa_critic", "actor_through_critic"];
    let eps = 1e-6;

    for seed in 0..n_seeds {
        let mut rng = StdRng::seed_from_u64(derive_seed(0xAD, seed));

        // Preference-conditioned actor, scalar probe of the tanh head.
        let actor = Actor::init(&mut rng, 6, 4, 2, &dims, "a");
        let obs = rand_tensor(&mut rng, 2, 6);
        let w = Tensor::constant(vec![2, 4], vec![0.3, 0.7, 0.5, 0.5, 0.9, 0.1, 0.2, 0.8]);
        let probe = rand_tensor(&mut rng, 2, 2);
        for p in actor.params() {
            let err = finite_difference_check(
                |tape| {
                    let a = actor.forward(tape, &obs, Some(&w))?;
                    let s = tape.mul(&a, &probe)?;
                    Ok(tape.sum(&s))
                },
                &p,
                eps,
            )?;
            worst[0] = worst[0].max(err);
        }

        // Centralized vector critic, gradients for parameters and for an
        // action input slot.
        let critic = GpCritic::init(&mut rng, 16, 2, &dims, "q");
        let state = rand_tensor(&mut rng, 2, 12);
        let action = Tensor::param(vec![2, 4], (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect(), "a_probe");
        let wq = Tensor::constant(vec![2, 2], vec![0.4, 0.6, 0.7, 0.3]);
        let mut targets = critic.params();
        targets.push(action.clone());
        for p in targets {
            let err = finite_difference_check(
                |tape| {
                    let input = tape.concat_cols(&[&state, &action])?;
                    let q = critic.forward(tape, &input)?;
                    let s = tape.rowdot(&q, &wq)?;
                    Ok(tape.sum(&s))
                },
                &p,
                eps,
            )?;
            worst[1] = worst[1].max(err);
        }

        // Full attention critic: embeddings -> 8-head attention ->
        // FFN/LayerNorm -> per-agent output heads, all parameters plus a
        // cross-agent action input.
        let aa = AaCritic::init(&mut rng, &[9, 9, 9], 2, &dims, "c")?;
        let obs_rows: Vec<Tensor> = (0..3).map(|_| rand_tensor(&mut rng, 2, 5)).collect();
        let act_rows: Vec<Tensor> = (0..3).map(|_| rand_tensor(&mut rng, 2, 2)).collect();
        let w_rows: Vec<Tensor> = (0..3)
            .map(|_| Tensor::constant(vec![2, 2], vec![0.5, 0.5, 0.2, 0.8]))
            .collect();
        let action_probe =
            Tensor::param(vec![2, 2], (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(), "a1_probe");
        let build_aa = |tape: &Tape| {
            let inputs: Vec<Tensor> = (0..3)
                .map(|j| {
                    let act = if j == 1 { &action_probe } else { &act_rows[j] };
                    tape.concat_cols(&[&obs_rows[j], act, &w_rows[j]])
                })
                .collect::<Result<_>>()?;
            let qs = aa.forward(tape, &inputs)?;
            let mut total: Option<Tensor> = None;
            for (q, w) in qs.iter().zip(&w_rows) {
                let s = tape.sum(&tape.rowdot(q, w)?);
                total = Some(match total {
                    None => s,
                    Some(t) => tape.add(&t, &s)?,
                });
            }
            Ok(total.expect("three agents"))
        };
        let mut targets = aa.params();
        targets.push(action_probe.clone());
        for p in targets {
            let err = finite_difference_check(&build_aa, &p, eps)?;
            worst[2] = worst[2].max(err);
        }

        // Deterministic policy-gradient composite: actor action feeds the
        // attention critic, gradient taken through the actor parameters.
        let pg_actor = Actor::init(&mut rng, 5, 0, 2, &dims, "pg");
        let pg_obs = rand_tensor(&mut rng, 2, 5);
        let build_composite = |tape: &Tape| {
            let a1 = pg_actor.forward(tape, &pg_obs, None)?;
            let inputs: Vec<Tensor> = (0..3)
                .map(|j| {
                    let act = if j == 1 { &a1 } else { &act_rows[j] };
                    tape.concat_cols(&[&obs_rows[j], act, &w_rows[j]])
                })
                .collect::<Result<_>>()?;
            let qs = aa.forward(tape, &inputs)?;
            let s = tape.rowdot(&qs[1], &w_rows[1])?;
            Ok(tape.sum(&s))
        };
        for p in pg_actor.params() {
            let err = finite_difference_check(&build_composite, &p, eps)?;
            worst[3] = worst[3].max(err);
        }
    }

    Ok(names
        .iter()
        .zip(worst)
        .map(|(n, e)| GradCheckReport { network: n.to_string(), max_rel_error: e })
        .collect())
}
