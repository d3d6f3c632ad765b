//! Train the agent-attention variant on the diagnostic world and compare
//! the greedy policy's global utility against a random policy and the
//! closed-form optimum.
//!
//! ```bash
//! cargo run --example train_diagnostic
//! ```

use mamorl::env::{EnvConfig, EnvKind};
use mamorl::metrics::{evaluate_gu, RolloutPolicy};
use mamorl::nets::NetDims;
use mamorl::prefs::build_generators;
use mamorl::train::{run_training, PrefSetup, TrainConfig, Variant};

fn main() -> mamorl::Result<()> {
    let env = EnvConfig {
        kind: EnvKind::Diagnostic,
        n_agents: 2,
        n_landmarks: 2,
        max_steps: 25,
        dt: 0.25,
        ..EnvConfig::default()
    };
    let cfg = TrainConfig {
        gamma: 0.9,
        tau: 0.02,
        batch: 64,
        actor_lr: 1e-3,
        critic_lr: 2e-3,
        update_every: 2,
        warmup_steps: 1000,
        episodes: 200, // 5000 env steps at horizon 25
        buffer_capacity: 5000,
        noise_sigma_start: 0.4,
        noise_sigma_end: 0.05,
        noise_decay_steps: 3000,
        gpi_candidates: 0,
        dims: NetDims {
            actor_hidden1: 64,
            actor_hidden2: 64,
            critic_hidden1: 64,
            critic_hidden2: 64,
            embed_dim: 32,
            attn_heads: 4,
            ffn_hidden: 64,
            qhead_hidden1: 64,
            qhead_hidden2: 32,
            embed_relu: true,
        },
    };
    let seed = 1;
    let generators = build_generators(17, env.total_agents(), 2, env.obs_dim(), 1.0)?;
    let setup = PrefSetup::observation(generators);

    let started = std::time::Instant::now();
    let (learner, logs) = run_training(Variant::Aa, &env, &cfg, &setup, seed)?;
    println!("trained {} episodes in {:.1?}", logs.len(), started.elapsed());
    println!("episode  env_steps  mean_return  motd_loss  sigma");
    for log in logs.iter().step_by(20).chain(logs.last()) {
        let mean_ret = log.returns.iter().sum::<f64>() / log.returns.len() as f64;
        println!(
            "{:>7}  {:>9}  {:>11.3}  {:>9.3}  {:.3}",
            log.episode, log.env_steps, mean_ret, log.mean_loss, log.noise_sigma
        );
    }

    let trained = evaluate_gu(&RolloutPolicy::Learner(&learner), &env, &setup, 64, 9001)?;
    let random = evaluate_gu(&RolloutPolicy::Random, &env, &setup, 64, 9001)?;
    let bound = trained.bound.expect("diagnostic world has a bound");
    println!("\nrandom-policy GU : {:>8.3}", random.gu);
    println!("trained GU       : {:>8.3}", trained.gu);
    println!("analytic bound   : {:>8.3}", bound);
    let halfway = random.gu + 0.5 * (bound - random.gu);
    println!("half-gap bar     : {:>8.3}  ({})", halfway, if trained.gu >= halfway { "met" } else { "not met" });
    Ok(())
}
