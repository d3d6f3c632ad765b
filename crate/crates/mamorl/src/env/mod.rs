//! Multi-objective particle environments.
//!
//! Continuous 2-D worlds with force-controlled agents and fixed-horizon
//! episodes. Every environment returns a 2-component reward vector per
//! agent per step. Three worlds are built in:
//!
//! - `spread` — cooperative coverage: a shared task component rewards
//!   covering all landmarks and penalizes agent collisions;
//! - `tag` — pursuit: cooperators chase adversaries, both sides are
//!   controlled by the same learner population;
//! - `diagnostic` — two fixed landmarks; objective `j` is the negated
//!   distance to landmark `j`, which gives the task a closed-form optimum
//!   per preference (see [`diagnostic_optimum`]).
//!
//! Movement costs energy: `c_m * |F| * |dp|` is charged on the energy
//! component (`spread`/`tag`) or on both distance objectives
//! (`diagnostic`, which has no separate energy slot).

use rand::Rng;

use crate::error::{Error, Result};
use crate::prefs::PreferenceVector;

/// Velocity carry-over per step.
pub const DAMPING: f64 = 0.75;
/// Collision / contact radius as a fraction of the world half-extent.
pub const COLLISION_RADIUS_FRAC: f64 = 0.1;

pub type Action = [f64; 2];
pub type Observation = Vec<f64>;
pub type RewardVec = Vec<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvKind {
    Spread,
    Tag,
    Diagnostic,
}

impl EnvKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnvKind::Spread => "spread",
            EnvKind::Tag => "tag",
            EnvKind::Diagnostic => "diagnostic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "spread" => Ok(EnvKind::Spread),
            "tag" => Ok(EnvKind::Tag),
            "diagnostic" => Ok(EnvKind::Diagnostic),
            other => Err(Error::Config(format!("unknown env kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub n_agents: usize,
    pub n_landmarks: usize,
    /// Tag only; adversaries are appended after the cooperators in every
    /// per-entity ordering.
    pub n_adversaries: usize,
    /// World is the box [-world_size, world_size]^2.
    pub world_size: f64,
    pub dt: f64,
    pub max_steps: usize,
    /// Movement energy coefficient c_m.
    pub energy_coeff: f64,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            kind: EnvKind::Spread,
            n_agents: 2,
            n_landmarks: 2,
            n_adversaries: 0,
            world_size: 1.0,
            dt: 0.1,
            max_steps: 25,
            energy_coeff: 1.0,
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 1 {
            return Err(Error::Config("n_agents must be >= 1".into()));
        }
        if self.dt <= 0.0 {
            return Err(Error::Config("dt must be positive".into()));
        }
        if self.max_steps < 1 {
            return Err(Error::Config("max_steps must be >= 1".into()));
        }
        if self.world_size <= 0.0 {
            return Err(Error::Config("world_size must be positive".into()));
        }
        if self.energy_coeff < 0.0 {
            return Err(Error::Config("energy_coeff must be >= 0".into()));
        }
        match self.kind {
            EnvKind::Spread => {
                if self.n_landmarks < self.n_agents {
                    return Err(Error::Config(
                        "spread needs n_landmarks >= n_agents".into(),
                    ));
                }
                if self.n_adversaries != 0 {
                    return Err(Error::Config("adversaries are tag-only".into()));
                }
            }
            EnvKind::Tag => {
                if self.n_adversaries < 1 {
                    return Err(Error::Config("tag needs n_adversaries >= 1".into()));
                }
            }
            EnvKind::Diagnostic => {
                if self.n_landmarks != 2 {
                    return Err(Error::Config(
                        "diagnostic has exactly 2 landmarks".into(),
                    ));
                }
                if self.n_adversaries != 0 {
                    return Err(Error::Config("adversaries are tag-only".into()));
                }
            }
        }
        Ok(())
    }

    /// All controlled entities (tag adversaries are learners too).
    pub fn total_agents(&self) -> usize {
        self.n_agents + self.n_adversaries
    }

    /// Reward dimension. Two objectives in every built-in world.
    pub fn reward_dim(&self) -> usize {
        2
    }

    /// Observation length: own position + own velocity + relative
    /// landmark positions + relative positions of all other agents.
    pub fn obs_dim(&self) -> usize {
        4 + 2 * self.n_landmarks + 2 * (self.total_agents() - 1)
    }

    /// Flat global state length: all agent positions and velocities,
    /// then all landmark positions.
    pub fn state_dim(&self) -> usize {
        4 * self.total_agents() + 2 * self.n_landmarks
    }

    pub fn collision_radius(&self) -> f64 {
        COLLISION_RADIUS_FRAC * self.world_size
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub agent_pos: Vec<[f64; 2]>,
    pub agent_vel: Vec<[f64; 2]>,
    pub landmark_pos: Vec<[f64; 2]>,
    pub step_index: usize,
}

impl WorldState {
    /// Flat vector for critic input: positions, velocities, landmarks.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.agent_pos.len() + 2 * self.landmark_pos.len());
        for p in &self.agent_pos {
            out.extend_from_slice(p);
        }
        for v in &self.agent_vel {
            out.extend_from_slice(v);
        }
        for l in &self.landmark_pos {
            out.extend_from_slice(l);
        }
        out
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn norm(v: [f64; 2]) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

/// Sample the initial state and return it with all agent observations.
pub fn reset(config: &EnvConfig, rng: &mut impl Rng) -> Result<(WorldState, Vec<Observation>)> {
    config.validate()?;
    let n = config.total_agents();
    let ws = config.world_size;
    let mut agent_pos = Vec::with_capacity(n);
    for _ in 0..n {
        agent_pos.push([rng.gen_range(-ws..=ws), rng.gen_range(-ws..=ws)]);
    }
    let landmark_pos = match config.kind {
        // Fixed endpoints give the task its closed-form optimum.
        EnvKind::Diagnostic => vec![[-ws, 0.0], [ws, 0.0]],
        _ => (0..config.n_landmarks)
            .map(|_| [rng.gen_range(-ws..=ws), rng.gen_range(-ws..=ws)])
            .collect(),
    };
    let state = WorldState {
        agent_pos,
        agent_vel: vec![[0.0, 0.0]; n],
        landmark_pos,
        step_index: 0,
    };
    let obs = all_observations(&state, config);
    Ok((state, obs))
}

/// Per-agent view: own position, own velocity, landmark offsets, offsets
/// of every other agent in entity order.
pub fn observe(state: &WorldState, agent_index: usize, config: &EnvConfig) -> Result<Observation> {
    let n = config.total_agents();
    if agent_index >= n {
        return Err(Error::IndexOutOfRange { index: agent_index, len: n });
    }
    let me = state.agent_pos[agent_index];
    let mut obs = Vec::with_capacity(config.obs_dim());
    obs.extend_from_slice(&me);
    obs.extend_from_slice(&state.agent_vel[agent_index]);
    for lm in &state.landmark_pos {
        obs.push(lm[0] - me[0]);
        obs.push(lm[1] - me[1]);
    }
    for (j, other) in state.agent_pos.iter().enumerate() {
        if j != agent_index {
            obs.push(other[0] - me[0]);
            obs.push(other[1] - me[1]);
        }
    }
    Ok(obs)
}

pub fn all_observations(state: &WorldState, config: &EnvConfig) -> Vec<Observation> {
    (0..config.total_agents())
        .map(|i| observe(state, i, config).expect("agent index in range"))
        .collect()
}

/// Outcome of one environment transition.
pub struct StepOutcome {
    pub state: WorldState,
    pub observations: Vec<Observation>,
    pub rewards: Vec<RewardVec>,
    pub done: bool,
}

/// Semi-implicit Euler step: v' = damping*v + dt*F, p' = p + dt*v',
/// positions clamped to the world box. Forces are clamped to [-1, 1]
/// per component before integration.
pub fn step(state: &WorldState, actions: &[Action], config: &EnvConfig) -> Result<StepOutcome> {
    if state.step_index >= config.max_steps {
        return Err(Error::EpisodeFinished(state.step_index));
    }
    let n = config.total_agents();
    if actions.len() != n {
        return Err(Error::ShapeMismatch {
            op: "step",
            lhs: vec![actions.len()],
            rhs: vec![n],
        });
    }
    let ws = config.world_size;
    let mut next = state.clone();
    let mut clamped = Vec::with_capacity(n);
    for i in 0..n {
        let f = [actions[i][0].clamp(-1.0, 1.0), actions[i][1].clamp(-1.0, 1.0)];
        clamped.push(f);
        for k in 0..2 {
            next.agent_vel[i][k] = DAMPING * state.agent_vel[i][k] + config.dt * f[k];
            next.agent_pos[i][k] =
                (state.agent_pos[i][k] + config.dt * next.agent_vel[i][k]).clamp(-ws, ws);
        }
    }
    next.step_index = state.step_index + 1;
    let rewards = compute_rewards(config.kind, state, &next, &clamped, config)?;
    let done = next.step_index == config.max_steps;
    let observations = all_observations(&next, config);
    Ok(StepOutcome { state: next, observations, rewards, done })
}

/// Reward vectors for the transition `state -> next` under `actions`.
/// Task terms are evaluated on the post-move positions.
pub fn compute_rewards(
    kind: EnvKind,
    state: &WorldState,
    next: &WorldState,
    actions: &[Action],
    config: &EnvConfig,
) -> Result<Vec<RewardVec>> {
    let n = config.total_agents();
    let energy: Vec<f64> = (0..n)
        .map(|i| {
            let dp = [
                next.agent_pos[i][0] - state.agent_pos[i][0],
                next.agent_pos[i][1] - state.agent_pos[i][1],
            ];
            config.energy_coeff * norm(actions[i]) * norm(dp)
        })
        .collect();

    let rewards = match kind {
        EnvKind::Spread => {
            let mut task = 0.0;
            for lm in &next.landmark_pos {
                let min_d = next
                    .agent_pos
                    .iter()
                    .map(|p| dist(*p, *lm))
                    .fold(f64::INFINITY, f64::min);
                task -= min_d;
            }
            let radius = config.collision_radius();
            for i in 0..n {
                for j in (i + 1)..n {
                    if dist(next.agent_pos[i], next.agent_pos[j]) < radius {
                        task -= 1.0;
                    }
                }
            }
            (0..n).map(|i| vec![task, -energy[i]]).collect()
        }
        EnvKind::Tag => {
            let radius = config.collision_radius();
            let coop = 0..config.n_agents;
            let advs = config.n_agents..n;
            let mut out = Vec::with_capacity(n);
            for i in coop.clone() {
                let mut task = 0.0;
                let mut min_d = f64::INFINITY;
                for k in advs.clone() {
                    let d = dist(next.agent_pos[i], next.agent_pos[k]);
                    if d < radius {
                        task += 10.0;
                    }
                    min_d = min_d.min(d);
                }
                task -= 0.1 * min_d;
                out.push(vec![task, -energy[i]]);
            }
            for k in advs.clone() {
                let mut task = 0.0;
                let mut min_d = f64::INFINITY;
                for i in coop.clone() {
                    let d = dist(next.agent_pos[i], next.agent_pos[k]);
                    if d < radius {
                        task -= 10.0;
                    }
                    min_d = min_d.min(d);
                }
                task += 0.1 * min_d;
                out.push(vec![task, -energy[k]]);
            }
            out
        }
        EnvKind::Diagnostic => {
            // Both objectives are distances; the movement cost is charged
            // on each so the scalarized utility of any simplex preference
            // pays it exactly once.
            (0..n)
                .map(|i| {
                    let d0 = dist(next.agent_pos[i], next.landmark_pos[0]);
                    let d1 = dist(next.agent_pos[i], next.landmark_pos[1]);
                    vec![-d0 - energy[i], -d1 - energy[i]]
                })
                .collect()
        }
    };
    Ok(rewards)
}

/// Best achievable per-step scalarized task reward in the diagnostic
/// world for a given preference: minimize `w0*d0 + w1*d1` over positions.
///
/// The minimizer lies on the segment between the landmarks (the whole
/// segment ties at w = (1/2, 1/2), otherwise the landmark with the larger
/// weight), giving `-2 * world_size * min(w0, w1)`. Energy is excluded;
/// it only lowers attainable utility, so this remains an upper bound.
pub fn diagnostic_optimum(config: &EnvConfig, preference: &PreferenceVector) -> Result<f64> {
    if config.kind != EnvKind::Diagnostic {
        return Err(Error::Config(format!(
            "diagnostic_optimum called on `{}` environment",
            config.kind.as_str()
        )));
    }
    let w = preference.weights();
    if w.len() != 2 {
        return Err(Error::Config(format!(
            "diagnostic world has 2 objectives, preference has {}",
            w.len()
        )));
    }
    Ok(-2.0 * config.world_size * w[0].min(w[1]))
}
