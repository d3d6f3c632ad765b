//! scratch: inspect greedy rollout behavior
use mamorl::env::{self, EnvConfig, EnvKind};
use mamorl::nets::NetDims;
use mamorl::prefs::build_generators;
use mamorl::train::{run_training, PrefSetup, TrainConfig, Variant};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn main() -> mamorl::Result<()> {
    let env_cfg = EnvConfig { kind: EnvKind::Diagnostic, n_agents: 2, n_landmarks: 2, max_steps: 25, ..EnvConfig::default() };
    let cfg = TrainConfig {
        gamma: 0.9, tau: 0.02, batch: 64, actor_lr: 1e-3, critic_lr: 2e-3,
        update_every: 2, warmup_steps: 1000, episodes: 200, buffer_capacity: 5000,
        noise_sigma_start: 0.4, noise_sigma_end: 0.05, noise_decay_steps: 3000, gpi_candidates: 0,
        dims: NetDims { actor_hidden1: 64, actor_hidden2: 64, critic_hidden1: 64, critic_hidden2: 64,
            embed_dim: 32, attn_heads: 4, ffn_hidden: 64, qhead_hidden1: 64, qhead_hidden2: 32, embed_relu: true },
    };
    let generators = build_generators(17, 2, 2, env_cfg.obs_dim(), 1.0)?;
    let setup = PrefSetup::observation(generators.clone());
    let (learner, _) = run_training(Variant::Aa, &env_cfg, &cfg, &setup, 1)?;

    let mut rng = StdRng::seed_from_u64(12345);
    let (mut state, mut obs) = env::reset(&env_cfg, &mut rng)?;
    println!("landmarks: {:?}", state.landmark_pos);
    for t in 0..env_cfg.max_steps {
        let prefs = learner.preferences_for(&obs, None)?;
        let acts = learner.act_greedy(&obs, &prefs)?;
        let pairs: Vec<[f64;2]> = acts.iter().map(|a| [a[0], a[1]]).collect();
        let out = env::step(&state, &pairs, &env_cfg)?;
        if t % 3 == 0 || t == env_cfg.max_steps-1 {
            println!("t={t:>2} a0 pos=({:+.2},{:+.2}) w0=({:.2},{:.2}) F=({:+.2},{:+.2}) r=({:+.3},{:+.3}) | a1 pos=({:+.2},{:+.2}) w1=({:.2},{:.2}) F=({:+.2},{:+.2})",
                state.agent_pos[0][0], state.agent_pos[0][1], prefs.agent(0).weights()[0], prefs.agent(0).weights()[1],
                acts[0][0], acts[0][1], out.rewards[0][0], out.rewards[0][1],
                state.agent_pos[1][0], state.agent_pos[1][1], prefs.agent(1).weights()[0], prefs.agent(1).weights()[1],
                acts[1][0], acts[1][1]);
        }
        state = out.state; obs = out.observations;
        if out.done { break; }
    }
    Ok(())
}
