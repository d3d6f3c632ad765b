//! scratch: GU learning curves for aa vs ip
use mamorl::env::{EnvConfig, EnvKind};
use mamorl::metrics::{evaluate_gu, RolloutPolicy};
use mamorl::nets::NetDims;
use mamorl::prefs::{PreferenceGenerator, PreferenceVector};
use mamorl::train::{run_training, PrefSetup, TrainConfig, Variant};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn conflicting_generators(seed: u64, obs_dim: usize, coupling: f64) -> mamorl::Result<Vec<PreferenceGenerator>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut gens = Vec::new();
    for agent in 0..2usize {
        let mut matrix = vec![0.0; 2 * obs_dim];
        for j in 0..2 {
            for c in [obs_dim - 2, obs_dim - 1] {
                matrix[j * obs_dim + c] = rng.gen_range(-coupling..coupling);
            }
        }
        let corner = if agent == 0 { vec![0.85, 0.15] } else { vec![0.15, 0.85] };
        let bias: Vec<f64> = corner.iter().map(|w: &f64| w.ln()).collect();
        gens.push(PreferenceGenerator::new(agent, matrix, bias, 2, obs_dim)?);
    }
    Ok(gens)
}

fn main() -> mamorl::Result<()> {
    let env = EnvConfig { kind: EnvKind::Diagnostic, n_agents: 2, n_landmarks: 2, max_steps: 25, dt: 0.25, ..EnvConfig::default() };
    let gens = conflicting_generators(23, env.obs_dim(), 1.5)?;
    let setup = PrefSetup::observation(gens);
    for episodes in [160usize, 320, 480, 640] {
        let cfg = TrainConfig {
            gamma: 0.9, tau: 0.02, batch: 96, actor_lr: 1e-3, critic_lr: 2e-3,
            update_every: 3, warmup_steps: 1000, episodes, buffer_capacity: 20000,
            noise_sigma_start: 0.4, noise_sigma_end: 0.05, noise_decay_steps: 3000, gpi_candidates: 0,
            dims: NetDims { actor_hidden1: 64, actor_hidden2: 64, critic_hidden1: 64, critic_hidden2: 64,
                embed_dim: 48, attn_heads: 4, ffn_hidden: 96, qhead_hidden1: 96, qhead_hidden2: 64, embed_relu: true },
        };
        let mut line = format!("ep={episodes:>3}: ");
        for variant in [Variant::Aa, Variant::Ip] {
            let mut gus = vec![];
            for seed in [1u64, 2] {
                let (learner, _) = run_training(variant, &env, &cfg, &setup, seed)?;
                gus.push(evaluate_gu(&RolloutPolicy::Learner(&learner), &env, &setup, 64, 7000 + seed)?.gu);
            }
            line += &format!("{}={:.3} ", variant.as_str(), gus.iter().sum::<f64>() / 2.0);
        }
        println!("{line}");
    }
    Ok(())
}
