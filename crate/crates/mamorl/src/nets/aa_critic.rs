//! Agent-attention critic.
//!
//! Per agent: a private embedding of `(o_i, a_i, w_i)` into a shared
//! latent space. Across agents: shared multi-head self-attention over
//! the N embeddings, an output projection, and a shared FFN with
//! residual connection and LayerNorm. Per agent again: a private head
//! mapping the agent's slice to its vector Q-value. Every agent's Q
//! depends on every agent's action through the attention mixing.

use rand::Rng;

use super::{Linear, NetDims, NormParams};
use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};

struct AttentionHead {
    wq: Tensor,
    wk: Tensor,
    wv: Tensor,
}

impl AttentionHead {
    fn init(rng: &mut impl Rng, d: usize, d_h: usize, name: &str) -> Self {
        let bound = 1.0 / (d as f64).sqrt();
        let mut mk = |tag: &str| {
            let vals: Vec<f64> = (0..d * d_h).map(|_| rng.gen_range(-bound..bound)).collect();
            Tensor::param(vec![d, d_h], vals, &format!("{name}.{tag}"))
        };
        AttentionHead { wq: mk("wq"), wk: mk("wk"), wv: mk("wv") }
    }

    fn clone_as_target(&self) -> AttentionHead {
        AttentionHead {
            wq: self.wq.deep_clone(true),
            wk: self.wk.deep_clone(true),
            wv: self.wv.deep_clone(true),
        }
    }
}

struct QHead {
    l1: Linear,
    l2: Linear,
    out: Linear,
}

impl QHead {
    fn init(rng: &mut impl Rng, d: usize, m: usize, dims: &NetDims, name: &str) -> Self {
        QHead {
            l1: Linear::init(rng, d, dims.qhead_hidden1, &format!("{name}.l1")),
            l2: Linear::init(rng, dims.qhead_hidden1, dims.qhead_hidden2, &format!("{name}.l2")),
            out: Linear::init(rng, dims.qhead_hidden2, m, &format!("{name}.out")),
        }
    }

    fn forward(&self, tape: &Tape, h: &Tensor) -> Result<Tensor> {
        let a = tape.relu(&self.l1.forward(tape, h)?);
        let b = tape.relu(&self.l2.forward(tape, &a)?);
        self.out.forward(tape, &b)
    }

    fn params(&self) -> Vec<Tensor> {
        let mut p = self.l1.params();
        p.extend(self.l2.params());
        p.extend(self.out.params());
        p
    }

    fn clone_as_target(&self) -> QHead {
        QHead {
            l1: self.l1.clone_as_target(),
            l2: self.l2.clone_as_target(),
            out: self.out.clone_as_target(),
        }
    }
}

pub struct AaCritic {
    embeds: Vec<Linear>,
    heads: Vec<AttentionHead>,
    w_o: Tensor,
    ffn1: Linear,
    ffn2: Linear,
    norm: NormParams,
    q_heads: Vec<QHead>,
    pub input_dims: Vec<usize>,
    pub d: usize,
    pub d_h: usize,
    pub m: usize,
    pub embed_relu: bool,
}

impl AaCritic {
    /// `input_dims[i]` is agent i's embedding input width
    /// (`obs_dim_i + action_dim + m`).
    pub fn init(
        rng: &mut impl Rng,
        input_dims: &[usize],
        m: usize,
        dims: &NetDims,
        name: &str,
    ) -> Result<Self> {
        dims.validate()?;
        let d = dims.embed_dim;
        let d_h = dims.head_dim();
        let embeds = input_dims
            .iter()
            .enumerate()
            .map(|(i, &in_dim)| Linear::init(rng, in_dim, d, &format!("{name}.emb{i}")))
            .collect();
        let heads = (0..dims.attn_heads)
            .map(|h| AttentionHead::init(rng, d, d_h, &format!("{name}.att{h}")))
            .collect();
        let bound = 1.0 / (d as f64).sqrt();
        let w_o = Tensor::param(
            vec![d, d],
            (0..d * d).map(|_| rng.gen_range(-bound..bound)).collect(),
            &format!("{name}.wo"),
        );
        let ffn1 = Linear::init(rng, d, dims.ffn_hidden, &format!("{name}.ffn1"));
        let ffn2 = Linear::init(rng, dims.ffn_hidden, d, &format!("{name}.ffn2"));
        let norm = NormParams::init(d, &format!("{name}.norm"));
        let q_heads = (0..input_dims.len())
            .map(|i| QHead::init(rng, d, m, dims, &format!("{name}.q{i}")))
            .collect();
        Ok(AaCritic {
            embeds,
            heads,
            w_o,
            ffn1,
            ffn2,
            norm,
            q_heads,
            input_dims: input_dims.to_vec(),
            d,
            d_h,
            m,
            embed_relu: dims.embed_relu,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.embeds.len()
    }

    /// Agent i's latent feature x_i from its `(o_i, a_i, w_i)` rows.
    pub fn embed(&self, tape: &Tape, agent: usize, input: &Tensor) -> Result<Tensor> {
        if input.shape().last() != Some(&self.input_dims[agent]) {
            return Err(Error::ShapeMismatch {
                op: "aa_embed",
                lhs: vec![self.input_dims[agent]],
                rhs: input.shape().to_vec(),
            });
        }
        let x = self.embeds[agent].forward(tape, input)?;
        Ok(if self.embed_relu { tape.relu(&x) } else { x })
    }

    /// Shared multi-head attention over the agent embeddings.
    ///
    /// Returns one mixed `[batch, d]` row block per agent plus the
    /// attention weights, one `[batch, N]` row-stochastic block per
    /// (head, agent) in head-major order.
    pub fn attention(&self, tape: &Tape, xs: &[Tensor]) -> Result<(Vec<Tensor>, Vec<Tensor>)> {
        let n = xs.len();
        assert!(n >= 1, "attention over zero agents");
        let scale = 1.0 / (self.d_h as f64).sqrt();
        let mut per_agent_heads: Vec<Vec<Tensor>> = vec![Vec::with_capacity(self.heads.len()); n];
        let mut alphas = Vec::with_capacity(self.heads.len() * n);
        for head in &self.heads {
            let qs: Vec<Tensor> = xs.iter().map(|x| tape.matmul(x, &head.wq)).collect::<Result<_>>()?;
            let ks: Vec<Tensor> = xs.iter().map(|x| tape.matmul(x, &head.wk)).collect::<Result<_>>()?;
            let vs: Vec<Tensor> = xs.iter().map(|x| tape.matmul(x, &head.wv)).collect::<Result<_>>()?;
            for i in 0..n {
                let scores: Vec<Tensor> = ks
                    .iter()
                    .map(|k| tape.rowdot(&qs[i], k))
                    .collect::<Result<_>>()?;
                let score_refs: Vec<&Tensor> = scores.iter().collect();
                let logits = tape.scale(&tape.concat_cols(&score_refs)?, scale);
                let alpha = tape.softmax(&logits)?;
                let mut z: Option<Tensor> = None;
                for (j, v) in vs.iter().enumerate() {
                    let aij = tape.slice_cols(&alpha, j, 1)?;
                    let term = tape.scale_rows(v, &aij)?;
                    z = Some(match z {
                        None => term,
                        Some(acc) => tape.add(&acc, &term)?,
                    });
                }
                per_agent_heads[i].push(z.expect("n >= 1"));
                alphas.push(alpha);
            }
        }
        let mut mixed = Vec::with_capacity(n);
        for head_outputs in per_agent_heads {
            let refs: Vec<&Tensor> = head_outputs.iter().collect();
            let concat = tape.concat_cols(&refs)?;
            mixed.push(tape.matmul(&concat, &self.w_o)?);
        }
        Ok((mixed, alphas))
    }

    /// Residual FFN plus LayerNorm on one agent's `[batch, d]` rows.
    pub fn ffn_norm(&self, tape: &Tape, h: &Tensor) -> Result<Tensor> {
        let f = tape.relu(&self.ffn1.forward(tape, h)?);
        let f = self.ffn2.forward(tape, &f)?;
        let res = tape.add(h, &f)?;
        self.norm.forward(tape, &res)
    }

    /// Attention + FFN/LayerNorm: the whole shared block. Permutation
    /// equivariant in the agent axis (all parameters here are shared).
    pub fn shared_block(&self, tape: &Tape, xs: &[Tensor]) -> Result<Vec<Tensor>> {
        let (mixed, _) = self.attention(tape, xs)?;
        mixed.iter().map(|h| self.ffn_norm(tape, h)).collect()
    }

    /// Agent i's vector Q from its slice of the shared block output.
    pub fn q_output(&self, tape: &Tape, agent: usize, h_tilde: &Tensor) -> Result<Tensor> {
        if h_tilde.shape().last() != Some(&self.d) {
            return Err(Error::ShapeMismatch {
                op: "aa_q_output",
                lhs: vec![self.d],
                rhs: h_tilde.shape().to_vec(),
            });
        }
        self.q_heads[agent].forward(tape, h_tilde)
    }

    /// Full pipeline: one `[batch, m]` Q block per agent.
    pub fn forward(&self, tape: &Tape, inputs: &[Tensor]) -> Result<Vec<Tensor>> {
        Ok(self.forward_with_attention(tape, inputs)?.0)
    }

    pub fn forward_with_attention(
        &self,
        tape: &Tape,
        inputs: &[Tensor],
    ) -> Result<(Vec<Tensor>, Vec<Tensor>)> {
        if inputs.len() != self.n_agents() {
            return Err(Error::ShapeMismatch {
                op: "aa_forward",
                lhs: vec![self.n_agents()],
                rhs: vec![inputs.len()],
            });
        }
        let xs: Vec<Tensor> = inputs
            .iter()
            .enumerate()
            .map(|(i, inp)| self.embed(tape, i, inp))
            .collect::<Result<_>>()?;
        let (mixed, alphas) = self.attention(tape, &xs)?;
        let mut qs = Vec::with_capacity(xs.len());
        for (i, h) in mixed.iter().enumerate() {
            let ht = self.ffn_norm(tape, h)?;
            qs.push(self.q_output(tape, i, &ht)?);
        }
        Ok((qs, alphas))
    }

    /// Parameters of the shared attention stack (per-agent parameters
    /// excluded).
    pub fn shared_params(&self) -> Vec<Tensor> {
        let mut p = Vec::new();
        for h in &self.heads {
            p.push(h.wq.clone());
            p.push(h.wk.clone());
            p.push(h.wv.clone());
        }
        p.push(self.w_o.clone());
        p.extend(self.ffn1.params());
        p.extend(self.ffn2.params());
        p.extend(self.norm.params());
        p
    }

    /// Agent i's private parameters: embedding plus Q head.
    pub fn agent_params(&self, agent: usize) -> Vec<Tensor> {
        let mut p = self.embeds[agent].params();
        p.extend(self.q_heads[agent].params());
        p
    }

    pub fn params(&self) -> Vec<Tensor> {
        let mut p = Vec::new();
        for i in 0..self.n_agents() {
            p.extend(self.embeds[i].params());
        }
        p.extend(self.shared_params());
        for i in 0..self.n_agents() {
            p.extend(self.q_heads[i].params());
        }
        p
    }

    pub fn clone_as_target(&self) -> AaCritic {
        AaCritic {
            embeds: self.embeds.iter().map(|e| e.clone_as_target()).collect(),
            heads: self.heads.iter().map(|h| h.clone_as_target()).collect(),
            w_o: self.w_o.deep_clone(true),
            ffn1: self.ffn1.clone_as_target(),
            ffn2: self.ffn2.clone_as_target(),
            norm: self.norm.clone_as_target(),
            q_heads: self.q_heads.iter().map(|q| q.clone_as_target()).collect(),
            input_dims: self.input_dims.clone(),
            d: self.d,
            d_h: self.d_h,
            m: self.m,
            embed_relu: self.embed_relu,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::finite_difference_check;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn tiny_dims() -> NetDims {
        NetDims {
            embed_dim: 16,
            attn_heads: 4,
            ffn_hidden: 12,
            qhead_hidden1: 10,
            qhead_hidden2: 8,
            ..NetDims::default()
        }
    }

    fn random_inputs(rng: &mut StdRng, dims: &[usize], batch: usize) -> Vec<Tensor> {
        dims.iter()
            .map(|&d| {
                Tensor::constant(
                    vec![batch, d],
                    (0..batch * d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                )
            })
            .collect()
    }

    #[test]
    fn embedding_has_latent_width_for_heterogeneous_inputs() {
        let mut rng = StdRng::seed_from_u64(1);
        let critic = AaCritic::init(&mut rng, &[7, 11], 2, &tiny_dims(), "c").unwrap();
        let tape = Tape::new();
        let a = Tensor::constant(vec![3, 7], vec![0.1; 21]);
        let b = Tensor::constant(vec![3, 11], vec![0.1; 33]);
        assert_eq!(critic.embed(&tape, 0, &a).unwrap().shape(), &[3, 16]);
        assert_eq!(critic.embed(&tape, 1, &b).unwrap().shape(), &[3, 16]);
        assert!(critic.embed(&tape, 0, &b).is_err());
    }

    #[test]
    fn agents_use_distinct_embedding_parameters() {
        let mut rng = StdRng::seed_from_u64(2);
        let critic = AaCritic::init(&mut rng, &[6, 6], 2, &tiny_dims(), "c").unwrap();
        let tape = Tape::new();
        let x = Tensor::constant(vec![1, 6], vec![0.4, -0.2, 0.9, 0.0, 0.3, -0.7]);
        let e0 = critic.embed(&tape, 0, &x).unwrap().to_vec();
        let e1 = critic.embed(&tape, 1, &x).unwrap().to_vec();
        assert_ne!(e0, e1);
    }

    #[test]
    fn single_agent_attends_to_itself() {
        let mut rng = StdRng::seed_from_u64(3);
        let critic = AaCritic::init(&mut rng, &[5], 2, &tiny_dims(), "c").unwrap();
        let tape = Tape::new();
        let xs = random_inputs(&mut rng, &[16], 2);
        let (_, alphas) = critic.attention(&tape, &xs).unwrap();
        for alpha in alphas {
            for v in alpha.to_vec() {
                assert!((v - 1.0).abs() < 1e-15, "softmax of a singleton is 1");
            }
        }
    }

    #[test]
    fn attention_rows_sum_to_one_for_all_head_counts() {
        let mut rng = StdRng::seed_from_u64(4);
        let critic = AaCritic::init(&mut rng, &[5; 8], 2, &tiny_dims(), "c").unwrap();
        for n in 1..=8 {
            let tape = Tape::new();
            let xs = random_inputs(&mut rng, &vec![16; n], 3);
            let (_, alphas) = critic.attention(&tape, &xs).unwrap();
            assert_eq!(alphas.len(), 4 * n);
            for alpha in alphas {
                let v = alpha.to_vec();
                for row in v.chunks(n) {
                    let s: f64 = row.iter().sum();
                    assert!((s - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn identical_embeddings_give_identical_rows() {
        let mut rng = StdRng::seed_from_u64(5);
        let critic = AaCritic::init(&mut rng, &[5, 5, 5], 2, &tiny_dims(), "c").unwrap();
        let tape = Tape::new();
        let row = Tensor::constant(vec![1, 16], (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let xs = vec![row.clone(), row.clone(), row];
        let (mixed, _) = critic.attention(&tape, &xs).unwrap();
        let first = mixed[0].to_vec();
        for m in &mixed[1..] {
            assert_eq!(m.to_vec(), first);
        }
    }

    #[test]
    fn shared_block_is_permutation_equivariant() {
        let mut rng = StdRng::seed_from_u64(6);
        let critic = AaCritic::init(&mut rng, &[5; 4], 2, &tiny_dims(), "c").unwrap();
        let xs = random_inputs(&mut rng, &[16; 4], 2);
        let tape = Tape::new();
        let base: Vec<Vec<f64>> = critic
            .shared_block(&tape, &xs)
            .unwrap()
            .iter()
            .map(|t| t.to_vec())
            .collect();
        let perm = [2usize, 0, 3, 1];
        let permuted: Vec<Tensor> = perm.iter().map(|&i| xs[i].clone()).collect();
        let tape = Tape::new();
        let out: Vec<Vec<f64>> = critic
            .shared_block(&tape, &permuted)
            .unwrap()
            .iter()
            .map(|t| t.to_vec())
            .collect();
        // Exact up to rounding: permuting agents reorders the attention
        // sums, so values may differ in the last few ulps.
        for (slot, &src) in perm.iter().enumerate() {
            for (a, b) in out[slot].iter().zip(&base[src]) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "row {slot} vs base {src}: {a} != {b}");
            }
        }
    }

    #[test]
    fn ffn_norm_rows_are_normalized_and_residual_passes_identity() {
        let mut rng = StdRng::seed_from_u64(7);
        let dims = tiny_dims();
        let critic = AaCritic::init(&mut rng, &[5, 5], 2, &dims, "c").unwrap();
        let tape = Tape::new();
        let h = Tensor::constant(vec![3, 16], (0..48).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let out = critic.ffn_norm(&tape, &h).unwrap().to_vec();
        for row in out.chunks(16) {
            let mean: f64 = row.iter().sum::<f64>() / 16.0;
            let var: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 16.0;
            assert!(mean.abs() < 1e-10, "mean {mean}");
            assert!((var - 1.0).abs() < 1e-3, "var {var}");
        }

        // Zero FFN weights reduce the block to row normalization of h.
        let zeroed = AaCritic {
            ffn1: Linear::zeros(16, dims.ffn_hidden, "z.ffn1"),
            ffn2: Linear::zeros(dims.ffn_hidden, 16, "z.ffn2"),
            ..critic
        };
        let tape = Tape::new();
        let got = zeroed.ffn_norm(&tape, &h).unwrap().to_vec();
        let expect = tape
            .layer_norm(
                &h,
                &Tensor::constant(vec![16], vec![1.0; 16]),
                &Tensor::constant(vec![16], vec![0.0; 16]),
            )
            .unwrap()
            .to_vec();
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_q_head_outputs_zero_vector() {
        let mut rng = StdRng::seed_from_u64(8);
        let dims = tiny_dims();
        let mut critic = AaCritic::init(&mut rng, &[5, 5], 2, &dims, "c").unwrap();
        critic.q_heads[0] = QHead {
            l1: Linear::zeros(16, dims.qhead_hidden1, "z.l1"),
            l2: Linear::zeros(dims.qhead_hidden1, dims.qhead_hidden2, "z.l2"),
            out: Linear::zeros(dims.qhead_hidden2, 2, "z.out"),
        };
        let tape = Tape::new();
        let h = Tensor::constant(vec![2, 16], vec![0.3; 32]);
        assert_eq!(critic.q_output(&tape, 0, &h).unwrap().to_vec(), vec![0.0; 4]);
    }

    #[test]
    fn cross_agent_action_gradient_flows_through_attention() {
        // d(w_0 . Q_0)/d a_1 is generically nonzero: agent 1's action
        // reaches agent 0's Q only via the shared attention.
        let mut rng = StdRng::seed_from_u64(9);
        let critic = AaCritic::init(&mut rng, &[6, 6], 2, &tiny_dims(), "c").unwrap();
        let obs: Vec<Tensor> = (0..2)
            .map(|_| Tensor::constant(vec![1, 2], vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
            .collect();
        let w = Tensor::constant(vec![1, 2], vec![0.6, 0.4]);
        let a0 = Tensor::constant(vec![1, 2], vec![0.2, -0.4]);
        let a1 = Tensor::param(vec![1, 2], vec![-0.1, 0.5], "a1");
        let build = |tape: &Tape| {
            let in0 = tape.concat_cols(&[&obs[0], &a0, &w])?;
            let in1 = tape.concat_cols(&[&obs[1], &a1, &w])?;
            let qs = critic.forward(tape, &[in0, in1])?;
            let s = tape.rowdot(&qs[0], &w)?;
            Ok(tape.sum(&s))
        };
        let err = finite_difference_check(build, &a1, 1e-6).unwrap();
        assert!(err < 1e-4, "fd err {err}");
        let tape = Tape::new();
        let loss = build(&tape).unwrap();
        a1.zero_grad();
        tape.backward(&loss).unwrap();
        assert!(a1.grad_vec().iter().any(|g| g.abs() > 1e-8), "cross-agent gradient must be nonzero");
    }

    #[test]
    fn full_critic_gradient_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(10);
        let critic = AaCritic::init(&mut rng, &[6, 6], 2, &tiny_dims(), "c").unwrap();
        let inputs = random_inputs(&mut rng, &[6, 6], 2);
        let w = Tensor::constant(vec![2, 2], vec![0.3, 0.7, 0.5, 0.5]);
        // Spot-check one parameter from each component group.
        let probes = vec![
            critic.embeds[0].w.clone(),
            critic.heads[1].wk.clone(),
            critic.w_o.clone(),
            critic.ffn1.w.clone(),
            critic.norm.gain.clone(),
            critic.q_heads[1].l2.w.clone(),
        ];
        for p in probes {
            let err = finite_difference_check(
                |tape| {
                    let qs = critic.forward(tape, &inputs)?;
                    let mut total: Option<Tensor> = None;
                    for q in &qs {
                        let s = tape.rowdot(q, &w)?;
                        let s = tape.sum(&s);
                        total = Some(match total {
                            None => s,
                            Some(t) => tape.add(&t, &s)?,
                        });
                    }
                    Ok(total.expect("agents"))
                },
                &p,
                1e-6,
            )
            .unwrap();
            assert!(err < 1e-4, "param {} fd err {err}", p.name());
        }
    }
}
