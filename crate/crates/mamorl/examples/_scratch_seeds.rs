//! scratch: smoke-test feasibility across 5 seeds
use mamorl::env::{EnvConfig, EnvKind};
use mamorl::metrics::{evaluate_gu, RolloutPolicy};
use mamorl::nets::NetDims;
use mamorl::prefs::build_generators;
use mamorl::train::{run_training, PrefSetup, TrainConfig, Variant};

fn main() -> mamorl::Result<()> {
    let env = EnvConfig { kind: EnvKind::Diagnostic, n_agents: 2, n_landmarks: 2, max_steps: 25, dt: 0.25, ..EnvConfig::default() };
    let cfg = TrainConfig {
        gamma: 0.9, tau: 0.02, batch: 64, actor_lr: 1e-3, critic_lr: 2e-3,
        update_every: 2, warmup_steps: 1000, episodes: 200, buffer_capacity: 5000,
        noise_sigma_start: 0.4, noise_sigma_end: 0.05, noise_decay_steps: 3000, gpi_candidates: 0,
        dims: NetDims { actor_hidden1: 64, actor_hidden2: 64, critic_hidden1: 64, critic_hidden2: 64,
            embed_dim: 32, attn_heads: 4, ffn_hidden: 64, qhead_hidden1: 64, qhead_hidden2: 32, embed_relu: true },
    };
    let generators = build_generators(17, 2, 2, env.obs_dim(), 1.0)?;
    let setup = PrefSetup::observation(generators);
    let started = std::time::Instant::now();
    let (mut gus, mut rands, mut bounds) = (vec![], vec![], vec![]);
    for seed in 1..=5u64 {
        let t0 = std::time::Instant::now();
        let (learner, logs) = run_training(Variant::Aa, &env, &cfg, &setup, seed)?;
        let loss_at_1000 = logs.iter().find(|l| l.env_steps >= 1000 && l.mean_loss > 0.0).map(|l| l.mean_loss).unwrap();
        let loss_end = logs.last().unwrap().mean_loss;
        let trained = evaluate_gu(&RolloutPolicy::Learner(&learner), &env, &setup, 64, 9000 + seed)?;
        let random = evaluate_gu(&RolloutPolicy::Random, &env, &setup, 64, 9000 + seed)?;
        let bound = trained.bound.unwrap();
        println!("seed {seed}: GU={:.2} rand={:.2} bound={:.2} closure={:.0}% loss1000={:.3} lossEnd={:.3} ratio={:.1}% [{:.1?}]",
            trained.gu, random.gu, bound, 100.0*(random.gu-trained.gu)/(random.gu-bound),
            loss_at_1000, loss_end, 100.0*loss_end/loss_at_1000, t0.elapsed());
        gus.push(trained.gu); rands.push(random.gu); bounds.push(bound);
    }
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let (g, r, b) = (mean(&gus), mean(&rands), mean(&bounds));
    println!("means: GU={g:.2} rand={r:.2} bound={b:.2} bar={:.2} met={} total={:.1?}", r + 0.5*(b-r), g >= r + 0.5*(b-r), started.elapsed());
    Ok(())
}
