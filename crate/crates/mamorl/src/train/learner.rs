//! The learner bundles per-variant networks, their targets and
//! optimizers, and implements the update rules and the episode loop.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;

use super::gpi::{gpi_select_action, CriticScore};
use super::noise::{exploration_noise, noise_sigma};
use super::replay::{ReplayBuffer, Transition};
use super::{soft_update, TrainConfig, Variant};
use crate::autodiff::{Adam, Tape, Tensor};
use crate::env::{self, EnvConfig, Observation};
use crate::error::{Error, Result};
use crate::nets::{AaCritic, Actor, Checkpoint, GpCritic};
use crate::prefs::{
    sample_uniform_simplex, GlobalPreference, PreferenceGenerator, PreferenceVector,
};
use crate::{derive_seed, Result as CrateResult};

/// How per-step preferences are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrefCase {
    /// One uniform simplex draw per agent per episode.
    Random,
    /// Deterministic per-step map from each agent's observation.
    Observation,
}

impl PrefCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            PrefCase::Random => "random",
            PrefCase::Observation => "observation",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(PrefCase::Random),
            "observation" => Ok(PrefCase::Observation),
            other => Err(Error::Config(format!("unknown preference case `{other}`"))),
        }
    }
}

/// Preference wiring for a run. Generators are required (and used) only
/// in the observation case; build them once per experiment so every
/// variant under comparison sees the same maps.
#[derive(Clone)]
pub struct PrefSetup {
    pub case: PrefCase,
    pub generators: Vec<PreferenceGenerator>,
}

impl PrefSetup {
    pub fn random() -> Self {
        PrefSetup { case: PrefCase::Random, generators: Vec::new() }
    }

    pub fn observation(generators: Vec<PreferenceGenerator>) -> Self {
        PrefSetup { case: PrefCase::Observation, generators }
    }
}

/// Critic input row for centralized MLP critics:
/// `state ++ all actions ++ flattened preferences`.
pub fn gp_input_row(state: &[f64], actions: &[Vec<f64>], prefs: &GlobalPreference) -> Vec<f64> {
    let mut row = Vec::with_capacity(
        state.len() + actions.iter().map(Vec::len).sum::<usize>() + prefs.flatten().len(),
    );
    row.extend_from_slice(state);
    for a in actions {
        row.extend_from_slice(a);
    }
    row.extend(prefs.flatten());
    row
}

/// [`CriticScore`] view over a set of centralized vector critics.
pub struct CentralizedScore<'a> {
    pub critics: &'a [GpCritic],
}

impl CriticScore for CentralizedScore<'_> {
    fn q_values(
        &self,
        agent: usize,
        state: &[f64],
        actions: &[Vec<f64>],
        prefs: &GlobalPreference,
    ) -> Result<Vec<f64>> {
        self.critics[agent].eval(&gp_input_row(state, actions, prefs))
    }
}

/// One row of the per-episode training log.
#[derive(Clone, Debug)]
pub struct EpisodeLog {
    pub episode: usize,
    pub env_steps: usize,
    /// Preference-scalarized undiscounted return per agent.
    pub returns: Vec<f64>,
    /// Mean MOTD loss over the updates run during this episode (0 when
    /// no update ran).
    pub mean_loss: f64,
    pub noise_sigma: f64,
    pub wall_ms: u128,
}

/// Batched constant tensors assembled from sampled transitions.
struct BatchTensors {
    b: usize,
    state: Tensor,
    next_state: Tensor,
    obs: Vec<Tensor>,
    next_obs: Vec<Tensor>,
    actions: Vec<Tensor>,
    /// Stored per-agent preferences, `[B, m]` each.
    w: Vec<Tensor>,
    w_flat: Tensor,
    /// Next-step preferences: generator outputs on next observations in
    /// the observation case, the stored (episode-constant) preferences in
    /// the random case.
    next_w: Vec<Tensor>,
    next_w_flat: Tensor,
    /// Raw reward vectors, one flattened `[B * m]` buffer per agent.
    rewards: Vec<Vec<f64>>,
}

pub struct Learner {
    pub variant: Variant,
    pub env_cfg: EnvConfig,
    pub cfg: TrainConfig,
    pub pref_setup: PrefSetup,
    pub n_agents: usize,
    pub m: usize,
    pub action_dim: usize,
    pub actors: Vec<Actor>,
    pub actor_targets: Vec<Actor>,
    /// Per-agent MLP critics (`gp`, `ip`, `scalarized`); empty for `aa`.
    pub critics: Vec<GpCritic>,
    pub critic_targets: Vec<GpCritic>,
    /// Attention critic (`aa` only).
    pub aa: Option<AaCritic>,
    pub aa_target: Option<AaCritic>,
    actor_opts: Vec<Adam>,
    critic_opts: Vec<Adam>,
    shared_opt: Option<Adam>,
    gpi_rng: StdRng,
    pub seed: u64,
}

impl Learner {
    pub fn new(
        variant: Variant,
        env_cfg: &EnvConfig,
        cfg: &TrainConfig,
        pref_setup: &PrefSetup,
        seed: u64,
    ) -> Result<Self> {
        env_cfg.validate()?;
        cfg.validate()?;
        let n = env_cfg.total_agents();
        let m = env_cfg.reward_dim();
        let obs_dim = env_cfg.obs_dim();
        let state_dim = env_cfg.state_dim();
        let action_dim = 2;

        match (variant.is_global_preference(), pref_setup.case) {
            (true, PrefCase::Random) | (false, PrefCase::Observation) => {}
            (true, PrefCase::Observation) => {
                return Err(Error::Config(
                    "variant gp requires preference case `random`".into(),
                ))
            }
            (false, PrefCase::Random) => {
                return Err(Error::Config(format!(
                    "variant {} requires preference case `observation`",
                    variant.as_str()
                )))
            }
        }
        if pref_setup.case == PrefCase::Observation {
            if pref_setup.generators.len() != n {
                return Err(Error::Config(format!(
                    "need {n} preference generators, got {}",
                    pref_setup.generators.len()
                )));
            }
            for g in &pref_setup.generators {
                if g.obs_dim() != obs_dim || g.output_dim() != m {
                    return Err(Error::Config(
                        "preference generator dims do not match the environment".into(),
                    ));
                }
            }
        }

        let mut rng = StdRng::seed_from_u64(derive_seed(seed, 1));
        let pref_dim = if variant.is_global_preference() { n * m } else { 0 };
        let actors: Vec<Actor> = (0..n)
            .map(|i| Actor::init(&mut rng, obs_dim, pref_dim, action_dim, &cfg.dims, &format!("actor{i}")))
            .collect();
        let actor_targets: Vec<Actor> = actors.iter().map(Actor::clone_as_target).collect();

        let (critics, aa) = match variant {
            Variant::Gp => {
                let in_dim = state_dim + n * action_dim + n * m;
                let critics: Vec<GpCritic> = (0..n)
                    .map(|i| GpCritic::init(&mut rng, in_dim, m, &cfg.dims, &format!("critic{i}")))
                    .collect();
                (critics, None)
            }
            Variant::Ip => {
                let in_dim = obs_dim + action_dim + m;
                let critics: Vec<GpCritic> = (0..n)
                    .map(|i| GpCritic::init(&mut rng, in_dim, m, &cfg.dims, &format!("critic{i}")))
                    .collect();
                (critics, None)
            }
            Variant::Scalarized => {
                let in_dim = state_dim + n * action_dim + n * m;
                let critics: Vec<GpCritic> = (0..n)
                    .map(|i| GpCritic::init(&mut rng, in_dim, 1, &cfg.dims, &format!("critic{i}")))
                    .collect();
                (critics, None)
            }
            Variant::Aa => {
                let input_dims: Vec<usize> = vec![obs_dim + action_dim + m; n];
                let aa = AaCritic::init(&mut rng, &input_dims, m, &cfg.dims, "aacritic")?;
                (Vec::new(), Some(aa))
            }
        };
        let critic_targets: Vec<GpCritic> = critics.iter().map(GpCritic::clone_as_target).collect();
        let aa_target = aa.as_ref().map(AaCritic::clone_as_target);

        let actor_opts = actors.iter().map(|a| Adam::new(&a.params(), cfg.actor_lr)).collect();
        let (critic_opts, shared_opt) = match &aa {
            Some(aa) => {
                let per_agent = (0..n)
                    .map(|i| Adam::new(&aa.agent_params(i), cfg.critic_lr))
                    .collect();
                (per_agent, Some(Adam::new(&aa.shared_params(), cfg.critic_lr)))
            }
            None => (
                critics.iter().map(|c| Adam::new(&c.params(), cfg.critic_lr)).collect(),
                None,
            ),
        };

        Ok(Learner {
            variant,
            env_cfg: env_cfg.clone(),
            cfg: cfg.clone(),
            pref_setup: pref_setup.clone(),
            n_agents: n,
            m,
            action_dim,
            actors,
            actor_targets,
            critics,
            critic_targets,
            aa,
            aa_target,
            actor_opts,
            critic_opts,
            shared_opt,
            gpi_rng: StdRng::seed_from_u64(derive_seed(seed, 5)),
            seed,
        })
    }

    /// Active preferences for the current observations: generator outputs
    /// in the observation case, the episode draw in the random case.
    pub fn preferences_for(
        &self,
        obs: &[Observation],
        episode_prefs: Option<&GlobalPreference>,
    ) -> Result<GlobalPreference> {
        match self.pref_setup.case {
            PrefCase::Random => episode_prefs
                .cloned()
                .ok_or_else(|| Error::Config("random case needs an episode preference".into())),
            PrefCase::Observation => {
                let prefs = self
                    .pref_setup
                    .generators
                    .iter()
                    .zip(obs)
                    .map(|(g, o)| g.generate(o))
                    .collect::<Result<Vec<_>>>()?;
                Ok(GlobalPreference::new(prefs))
            }
        }
    }

    /// Greedy joint action (no exploration noise).
    pub fn act_greedy(&self, obs: &[Observation], prefs: &GlobalPreference) -> Result<Vec<Vec<f64>>> {
        let w_flat = prefs.flatten();
        (0..self.n_agents)
            .map(|i| {
                if self.variant.is_global_preference() {
                    self.actors[i].act(&obs[i], Some(&w_flat))
                } else {
                    self.actors[i].act(&obs[i], None)
                }
            })
            .collect()
    }

    fn batch_tensors(&self, batch: &[Transition]) -> Result<BatchTensors> {
        let b = batch.len();
        let n = self.n_agents;
        let m = self.m;
        let state_dim = batch[0].state.len();
        let obs_dim = batch[0].observations[0].len();
        let act_dim = self.action_dim;

        let mut state = Vec::with_capacity(b * state_dim);
        let mut next_state = Vec::with_capacity(b * state_dim);
        let mut obs = vec![Vec::with_capacity(b * obs_dim); n];
        let mut next_obs = vec![Vec::with_capacity(b * obs_dim); n];
        let mut actions = vec![Vec::with_capacity(b * act_dim); n];
        let mut w = vec![Vec::with_capacity(b * m); n];
        let mut w_flat = Vec::with_capacity(b * n * m);
        let mut next_w = vec![Vec::with_capacity(b * m); n];
        let mut next_w_flat = Vec::with_capacity(b * n * m);
        let mut rewards = vec![Vec::with_capacity(b * m); n];

        for tr in batch {
            state.extend_from_slice(&tr.state);
            next_state.extend_from_slice(&tr.next_state);
            let next_prefs: Vec<PreferenceVector> = match self.pref_setup.case {
                PrefCase::Observation => self
                    .pref_setup
                    .generators
                    .iter()
                    .zip(&tr.next_observations)
                    .map(|(g, o)| g.generate(o))
                    .collect::<Result<_>>()?,
                PrefCase::Random => tr.prefs.iter().cloned().collect(),
            };
            for i in 0..n {
                obs[i].extend_from_slice(&tr.observations[i]);
                next_obs[i].extend_from_slice(&tr.next_observations[i]);
                actions[i].extend_from_slice(&tr.actions[i]);
                w[i].extend_from_slice(tr.prefs.agent(i).weights());
                w_flat.extend_from_slice(tr.prefs.agent(i).weights());
                next_w[i].extend_from_slice(next_prefs[i].weights());
                next_w_flat.extend_from_slice(next_prefs[i].weights());
                rewards[i].extend_from_slice(&tr.rewards[i]);
            }
        }
        Ok(BatchTensors {
            b,
            state: Tensor::constant(vec![b, state_dim], state),
            next_state: Tensor::constant(vec![b, state_dim], next_state),
            obs: obs.into_iter().map(|v| Tensor::constant(vec![b, obs_dim], v)).collect(),
            next_obs: next_obs.into_iter().map(|v| Tensor::constant(vec![b, obs_dim], v)).collect(),
            actions: actions.into_iter().map(|v| Tensor::constant(vec![b, act_dim], v)).collect(),
            w: w.into_iter().map(|v| Tensor::constant(vec![b, m], v)).collect(),
            w_flat: Tensor::constant(vec![b, n * m], w_flat),
            next_w: next_w.into_iter().map(|v| Tensor::constant(vec![b, m], v)).collect(),
            next_w_flat: Tensor::constant(vec![b, n * m], next_w_flat),
            rewards,
        })
    }

    /// Vector Bellman targets, one flattened `[B * m]` buffer per agent
    /// (`m = 1` for the scalarized variant). Target networks only; no
    /// gradient flows anywhere here.
    pub fn motd_target(&mut self, batch: &[Transition]) -> Result<Vec<Vec<f64>>> {
        let gamma = self.cfg.gamma;
        let n = self.n_agents;
        match self.variant {
            Variant::Gp => {
                // Per-sample loop: each sample needs its own GPI search.
                let k = self.cfg.gpi_candidates;
                let mut y = vec![Vec::with_capacity(batch.len() * self.m); n];
                for tr in batch {
                    let w_flat = tr.prefs.flatten();
                    let next_actions: Vec<Vec<f64>> = (0..n)
                        .map(|j| self.actor_targets[j].act(&tr.next_observations[j], Some(&w_flat)))
                        .collect::<Result<_>>()?;
                    for i in 0..n {
                        let score = CentralizedScore { critics: &self.critic_targets };
                        let a_gpi = gpi_select_action(
                            &self.actor_targets[i],
                            &score,
                            i,
                            &tr.next_observations[i],
                            &tr.next_state,
                            &next_actions,
                            &tr.prefs,
                            &mut self.gpi_rng,
                            k,
                        )?;
                        let mut joint = next_actions.clone();
                        joint[i] = a_gpi;
                        let q = score.q_values(i, &tr.next_state, &joint, &tr.prefs)?;
                        for (rj, qj) in tr.rewards[i].iter().zip(&q) {
                            y[i].push(rj + gamma * qj);
                        }
                    }
                }
                Ok(y)
            }
            Variant::Aa => {
                let bt = self.batch_tensors(batch)?;
                let tape = Tape::new();
                let aa_t = self.aa_target.as_ref().expect("aa variant");
                let next_actions: Vec<Tensor> = (0..n)
                    .map(|j| self.actor_targets[j].forward(&tape, &bt.next_obs[j], None))
                    .collect::<Result<_>>()?;
                let inputs: Vec<Tensor> = (0..n)
                    .map(|i| tape.concat_cols(&[&bt.next_obs[i], &next_actions[i], &bt.next_w[i]]))
                    .collect::<Result<_>>()?;
                let qs = aa_t.forward(&tape, &inputs)?;
                Ok((0..n)
                    .map(|i| {
                        bt.rewards[i]
                            .iter()
                            .zip(qs[i].data().iter())
                            .map(|(r, q)| r + gamma * q)
                            .collect()
                    })
                    .collect())
            }
            Variant::Ip => {
                let bt = self.batch_tensors(batch)?;
                let tape = Tape::new();
                let mut y = Vec::with_capacity(n);
                for i in 0..n {
                    let a_next = self.actor_targets[i].forward(&tape, &bt.next_obs[i], None)?;
                    let input = tape.concat_cols(&[&bt.next_obs[i], &a_next, &bt.next_w[i]])?;
                    let q = self.critic_targets[i].forward(&tape, &input)?;
                    y.push(
                        bt.rewards[i]
                            .iter()
                            .zip(q.data().iter())
                            .map(|(r, qv)| r + gamma * qv)
                            .collect(),
                    );
                }
                Ok(y)
            }
            Variant::Scalarized => {
                let bt = self.batch_tensors(batch)?;
                let tape = Tape::new();
                let next_actions: Vec<Tensor> = (0..n)
                    .map(|j| self.actor_targets[j].forward(&tape, &bt.next_obs[j], None))
                    .collect::<Result<_>>()?;
                let mut parts: Vec<&Tensor> = vec![&bt.next_state];
                parts.extend(next_actions.iter());
                parts.push(&bt.next_w_flat);
                let input = tape.concat_cols(&parts)?;
                let mut y = Vec::with_capacity(n);
                for i in 0..n {
                    let q = self.critic_targets[i].forward(&tape, &input)?;
                    let qv = q.data();
                    let wv = bt.w[i].data();
                    let mut yi = Vec::with_capacity(bt.b);
                    for b in 0..bt.b {
                        let scalar_r: f64 = (0..self.m)
                            .map(|j| wv[b * self.m + j] * bt.rewards[i][b * self.m + j])
                            .sum();
                        yi.push(scalar_r + gamma * qv[b]);
                    }
                    y.push(yi);
                }
                Ok(y)
            }
        }
    }

    fn check_finite_loss(&self, loss: f64, agent: usize) -> Result<f64> {
        if !loss.is_finite() {
            return Err(Error::DivergedTraining {
                name: format!("critic{agent}"),
                what: "loss",
            });
        }
        Ok(loss)
    }

    /// Minimize the mean squared vector TD error against `targets`.
    /// Returns the per-agent loss values.
    pub fn critic_update(&mut self, batch: &[Transition], targets: &[Vec<f64>]) -> Result<Vec<f64>> {
        let bt = self.batch_tensors(batch)?;
        let n = self.n_agents;
        let inv_b = 1.0 / bt.b as f64;
        match self.variant {
            Variant::Aa => {
                let aa = self.aa.as_ref().expect("aa variant");
                let tape = Tape::new();
                let inputs: Vec<Tensor> = (0..n)
                    .map(|i| tape.concat_cols(&[&bt.obs[i], &bt.actions[i], &bt.w[i]]))
                    .collect::<Result<_>>()?;
                let qs = aa.forward(&tape, &inputs)?;

                // One backward over the summed loss: each agent's output
                // head only ever sees its own loss (no other loss reaches
                // it), while the shared attention stack accumulates the
                // gradients of every agent's loss.
                let mut losses = Vec::with_capacity(n);
                let mut total: Option<Tensor> = None;
                for i in 0..n {
                    let y = Tensor::constant(vec![bt.b, self.m], targets[i].clone());
                    let diff = tape.sub(&qs[i], &y)?;
                    let sq = tape.mul(&diff, &diff)?;
                    let loss = tape.scale(&tape.sum(&sq), inv_b);
                    losses.push(self.check_finite_loss(loss.item(), i)?);
                    total = Some(match total {
                        None => loss,
                        Some(t) => tape.add(&t, &loss)?,
                    });
                }
                for p in aa.params() {
                    p.zero_grad();
                }
                tape.backward(&total.expect("agents"))?;
                for opt in &mut self.critic_opts {
                    opt.step()?;
                }
                self.shared_opt.as_mut().expect("aa variant").step()?;
                Ok(losses)
            }
            _ => {
                let mut losses = Vec::with_capacity(n);
                for i in 0..n {
                    let tape = Tape::new();
                    let input = match self.variant {
                        Variant::Gp | Variant::Scalarized => {
                            let mut parts: Vec<&Tensor> = vec![&bt.state];
                            parts.extend(bt.actions.iter());
                            parts.push(&bt.w_flat);
                            tape.concat_cols(&parts)?
                        }
                        Variant::Ip => {
                            tape.concat_cols(&[&bt.obs[i], &bt.actions[i], &bt.w[i]])?
                        }
                        Variant::Aa => unreachable!(),
                    };
                    let q = self.critics[i].forward(&tape, &input)?;
                    let y = Tensor::constant(q.shape().to_vec(), targets[i].clone());
                    let diff = tape.sub(&q, &y)?;
                    let sq = tape.mul(&diff, &diff)?;
                    let loss = tape.scale(&tape.sum(&sq), inv_b);
                    for p in self.critics[i].params() {
                        p.zero_grad();
                    }
                    tape.backward(&loss)?;
                    losses.push(self.check_finite_loss(loss.item(), i)?);
                    self.critic_opts[i].step()?;
                }
                Ok(losses)
            }
        }
    }

    /// Ascend the preference-scalarized critic value through each agent's
    /// own action (other agents' actions stay fixed from the batch).
    pub fn actor_update(&mut self, batch: &[Transition]) -> Result<()> {
        let bt = self.batch_tensors(batch)?;
        let n = self.n_agents;
        let inv_b = 1.0 / bt.b as f64;
        for i in 0..n {
            let tape = Tape::new();
            let w_arg = if self.variant.is_global_preference() { Some(&bt.w_flat) } else { None };
            let a_i = self.actors[i].forward(&tape, &bt.obs[i], w_arg)?;
            let objective = match self.variant {
                Variant::Gp | Variant::Scalarized => {
                    let mut parts: Vec<&Tensor> = vec![&bt.state];
                    for j in 0..n {
                        parts.push(if j == i { &a_i } else { &bt.actions[j] });
                    }
                    parts.push(&bt.w_flat);
                    let input = tape.concat_cols(&parts)?;
                    let q = self.critics[i].forward(&tape, &input)?;
                    if self.variant == Variant::Scalarized {
                        // Already scalar.
                        tape.sum(&q)
                    } else {
                        let s = tape.rowdot(&q, &bt.w[i])?;
                        tape.sum(&s)
                    }
                }
                Variant::Ip => {
                    let input = tape.concat_cols(&[&bt.obs[i], &a_i, &bt.w[i]])?;
                    let q = self.critics[i].forward(&tape, &input)?;
                    let s = tape.rowdot(&q, &bt.w[i])?;
                    tape.sum(&s)
                }
                Variant::Aa => {
                    let aa = self.aa.as_ref().expect("aa variant");
                    let inputs: Vec<Tensor> = (0..n)
                        .map(|j| {
                            let act = if j == i { &a_i } else { &bt.actions[j] };
                            tape.concat_cols(&[&bt.obs[j], act, &bt.w[j]])
                        })
                        .collect::<Result<_>>()?;
                    let qs = aa.forward(&tape, &inputs)?;
                    let s = tape.rowdot(&qs[i], &bt.w[i])?;
                    tape.sum(&s)
                }
            };
            let loss = tape.scale(&objective, -inv_b);
            for p in self.all_critic_params() {
                p.zero_grad();
            }
            for p in self.actors[i].params() {
                p.zero_grad();
            }
            tape.backward(&loss)?;
            self.actor_opts[i].step()?;
            // Gradients that leaked into critic parameters on this tape
            // must not feed the next critic step.
            for p in self.all_critic_params() {
                p.zero_grad();
            }
        }
        Ok(())
    }

    fn all_critic_params(&self) -> Vec<Tensor> {
        match &self.aa {
            Some(aa) => aa.params(),
            None => self.critics.iter().flat_map(|c| c.params()).collect(),
        }
    }

    /// Blend every target network toward its online counterpart.
    pub fn soft_update_targets(&mut self) -> Result<()> {
        let tau = self.cfg.tau;
        for (a, t) in self.actors.iter().zip(&self.actor_targets) {
            soft_update(&a.params(), &t.params(), tau)?;
        }
        for (c, t) in self.critics.iter().zip(&self.critic_targets) {
            soft_update(&c.params(), &t.params(), tau)?;
        }
        if let (Some(aa), Some(aat)) = (&self.aa, &self.aa_target) {
            soft_update(&aa.params(), &aat.params(), tau)?;
        }
        Ok(())
    }

    /// One full update round: targets, critic step, actor step, soft
    /// target updates. Returns the mean MOTD loss across agents.
    pub fn update(&mut self, batch: &[Transition]) -> Result<f64> {
        let targets = self.motd_target(batch)?;
        let losses = self.critic_update(batch, &targets)?;
        self.actor_update(batch)?;
        self.soft_update_targets()?;
        Ok(losses.iter().sum::<f64>() / losses.len() as f64)
    }

    /// Every trainable parameter (online networks), in a fixed order.
    pub fn online_params(&self) -> Vec<Tensor> {
        let mut p: Vec<Tensor> = self.actors.iter().flat_map(|a| a.params()).collect();
        p.extend(self.all_critic_params());
        p
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut ckpt = Checkpoint::new();
        ckpt.push_meta("variant", self.variant.as_str());
        ckpt.push_meta("pref_case", self.pref_setup.case.as_str());
        ckpt.push_meta("n_agents", self.n_agents);
        ckpt.push_meta("m", self.m);
        ckpt.push_meta("seed", self.seed);
        let d = &self.cfg.dims;
        ckpt.push_meta(
            "dims",
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                d.actor_hidden1,
                d.actor_hidden2,
                d.critic_hidden1,
                d.critic_hidden2,
                d.embed_dim,
                d.attn_heads,
                d.ffn_hidden,
                d.qhead_hidden1,
                d.qhead_hidden2,
                d.embed_relu as u8
            ),
        );
        ckpt.push_params(&self.online_params())?;
        Ok(ckpt)
    }

    /// Rebuild a learner from a checkpoint. Target networks are reset to
    /// copies of the online networks (checkpoints serve evaluation, not
    /// mid-run resumption).
    pub fn from_checkpoint(
        ckpt: &Checkpoint,
        env_cfg: &EnvConfig,
        cfg: &TrainConfig,
        pref_setup: &PrefSetup,
    ) -> Result<Self> {
        let variant = Variant::parse(ckpt.require_meta("variant")?)?;
        let seed: u64 = ckpt
            .require_meta("seed")?
            .parse()
            .map_err(|e| Error::Checkpoint(format!("bad seed: {e}")))?;
        let dims_raw = ckpt.require_meta("dims")?;
        let parts: Vec<usize> = dims_raw
            .split(',')
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Checkpoint(format!("bad dims meta: {e}")))?;
        if parts.len() != 10 {
            return Err(Error::Checkpoint("dims meta needs 10 fields".into()));
        }
        let dims = crate::nets::NetDims {
            actor_hidden1: parts[0],
            actor_hidden2: parts[1],
            critic_hidden1: parts[2],
            critic_hidden2: parts[3],
            embed_dim: parts[4],
            attn_heads: parts[5],
            ffn_hidden: parts[6],
            qhead_hidden1: parts[7],
            qhead_hidden2: parts[8],
            embed_relu: parts[9] != 0,
        };
        let cfg = TrainConfig { dims, ..cfg.clone() };
        let mut learner = Learner::new(variant, env_cfg, &cfg, pref_setup, seed)?;
        ckpt.load_into(&learner.online_params())?;
        // Re-sync targets to the restored weights.
        learner.actor_targets = learner.actors.iter().map(Actor::clone_as_target).collect();
        learner.critic_targets = learner.critics.iter().map(GpCritic::clone_as_target).collect();
        learner.aa_target = learner.aa.as_ref().map(AaCritic::clone_as_target);
        Ok(learner)
    }
}

/// Execute the full training loop for one (variant, seed) cell.
///
/// Per step: observe, produce preferences, act with annealed Gaussian
/// noise, step the environment, store the transition; once past warmup,
/// every `update_every` steps sample a batch and run a full update round.
/// Returns the trained learner and one log row per episode.
pub fn run_training(
    variant: Variant,
    env_cfg: &EnvConfig,
    cfg: &TrainConfig,
    pref_setup: &PrefSetup,
    seed: u64,
) -> CrateResult<(Learner, Vec<EpisodeLog>)> {
    let mut learner = Learner::new(variant, env_cfg, cfg, pref_setup, seed)?;
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut env_rng = StdRng::seed_from_u64(derive_seed(seed, 2));
    let mut noise_rng = StdRng::seed_from_u64(derive_seed(seed, 3));
    let mut sample_rng = StdRng::seed_from_u64(derive_seed(seed, 4));
    let mut pref_rng = StdRng::seed_from_u64(derive_seed(seed, 6));

    let n = learner.n_agents;
    let m = learner.m;
    let mut logs = Vec::with_capacity(cfg.episodes);
    let mut global_step: usize = 0;

    for episode in 0..cfg.episodes {
        let started = Instant::now();
        let (mut state, mut obs) = env::reset(env_cfg, &mut env_rng)?;
        let episode_prefs = if variant.is_global_preference() {
            let prefs = (0..n)
                .map(|_| sample_uniform_simplex(&mut pref_rng, m))
                .collect::<Result<Vec<_>>>()?;
            Some(GlobalPreference::new(prefs))
        } else {
            None
        };
        let mut returns = vec![0.0; n];
        let mut losses = Vec::new();
        loop {
            let prefs = learner.preferences_for(&obs, episode_prefs.as_ref())?;
            let greedy = learner.act_greedy(&obs, &prefs)?;
            let actions: Vec<Vec<f64>> = greedy
                .iter()
                .map(|a| exploration_noise(a, global_step, cfg, &mut noise_rng))
                .collect();
            let act_pairs: Vec<[f64; 2]> = actions.iter().map(|a| [a[0], a[1]]).collect();
            let out = env::step(&state, &act_pairs, env_cfg)?;
            for i in 0..n {
                returns[i] += prefs.agent(i).scalarize(&out.rewards[i])?;
            }
            buffer.push(Transition {
                state: state.flat(),
                next_state: out.state.flat(),
                observations: obs.clone(),
                next_observations: out.observations.clone(),
                actions: actions.clone(),
                rewards: out.rewards.clone(),
                prefs,
            });
            global_step += 1;

            if global_step >= cfg.warmup_steps && global_step % cfg.update_every == 0 {
                if let Some(batch) = buffer.sample(&mut sample_rng, cfg.batch) {
                    let loss = learner.update(&batch).map_err(|e| {
                        Error::Config(format!("training aborted at env step {global_step}: {e}"))
                    })?;
                    losses.push(loss);
                }
            }

            state = out.state;
            obs = out.observations;
            if out.done {
                break;
            }
        }
        let mean_loss = if losses.is_empty() {
            0.0
        } else {
            losses.iter().sum::<f64>() / losses.len() as f64
        };
        logs.push(EpisodeLog {
            episode,
            env_steps: global_step,
            returns,
            mean_loss,
            noise_sigma: noise_sigma(global_step, cfg),
            wall_ms: started.elapsed().as_millis(),
        });
    }
    Ok((learner, logs))
}
