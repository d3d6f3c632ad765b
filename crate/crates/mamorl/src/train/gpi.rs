//! Generalized policy improvement over candidate own-preferences.
//!
//! At target-evaluation time an agent may do better under a preference
//! other than its own: each candidate preference induces a different
//! action from the preference-conditioned actor. The candidate whose
//! induced action scores highest under the agent's *true* preference
//! wins, and that action is returned.

use rand::rngs::StdRng;

use crate::error::Result;
use crate::nets::Actor;
use crate::prefs::{sample_uniform_simplex, GlobalPreference, PreferenceVector};

/// Anything that can score a joint action for one agent.
pub trait CriticScore {
    /// Vector Q for `agent` given the flat global state, the joint
    /// actions, and the global preference the critic conditions on.
    fn q_values(
        &self,
        agent: usize,
        state: &[f64],
        actions: &[Vec<f64>],
        prefs: &GlobalPreference,
    ) -> Result<Vec<f64>>;
}

/// Pick the best action among those induced by candidate own-preferences.
///
/// The candidate set always contains the true preference first, so the
/// returned action never scores below the plain `mu_i(o_i, W)` action;
/// ties resolve to the lowest candidate index. `joint_actions` carries
/// the other agents' (fixed) actions; slot `agent` is replaced per
/// candidate.
#[allow(clippy::too_many_arguments)]
pub fn gpi_select_action(
    actor: &Actor,
    critic: &dyn CriticScore,
    agent: usize,
    obs: &[f64],
    state: &[f64],
    joint_actions: &[Vec<f64>],
    prefs: &GlobalPreference,
    rng: &mut StdRng,
    candidates: usize,
) -> Result<Vec<f64>> {
    let m = prefs.agent(agent).len();
    let true_w = prefs.agent(agent).clone();
    let mut candidate_prefs: Vec<PreferenceVector> = Vec::with_capacity(candidates + 1);
    candidate_prefs.push(true_w.clone());
    for _ in 0..candidates {
        candidate_prefs.push(sample_uniform_simplex(rng, m)?);
    }

    let mut best_action: Option<Vec<f64>> = None;
    let mut best_score = f64::NEG_INFINITY;
    for cand in candidate_prefs {
        let mut with_cand: Vec<PreferenceVector> = prefs.iter().cloned().collect();
        with_cand[agent] = cand;
        let cand_prefs = GlobalPreference::new(with_cand);
        let action = actor.act(obs, Some(&cand_prefs.flatten()))?;
        let mut joint = joint_actions.to_vec();
        joint[agent] = action.clone();
        let q = critic.q_values(agent, state, &joint, &cand_prefs)?;
        let score = true_w.scalarize(&q)?;
        if score > best_score {
            best_score = score;
            best_action = Some(action);
        }
    }
    Ok(best_action.expect("candidate set is nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::NetDims;
    use rand::SeedableRng;

    struct ZeroCritic;
    impl CriticScore for ZeroCritic {
        fn q_values(
            &self,
            _agent: usize,
            _state: &[f64],
            _actions: &[Vec<f64>],
            _prefs: &GlobalPreference,
        ) -> Result<Vec<f64>> {
            Ok(vec![0.0, 0.0])
        }
    }

    /// Scores a fixed action highest regardless of preference.
    struct FavorAction {
        target: Vec<f64>,
    }
    impl CriticScore for FavorAction {
        fn q_values(
            &self,
            agent: usize,
            _state: &[f64],
            actions: &[Vec<f64>],
            _prefs: &GlobalPreference,
        ) -> Result<Vec<f64>> {
            let d: f64 = actions[agent]
                .iter()
                .zip(&self.target)
                .map(|(a, t)| (a - t) * (a - t))
                .sum();
            Ok(vec![-d, -d])
        }
    }

    fn setup() -> (Actor, GlobalPreference, Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let dims = NetDims { actor_hidden1: 8, actor_hidden2: 8, ..NetDims::default() };
        let mut rng = StdRng::seed_from_u64(3);
        let actor = Actor::init(&mut rng, 4, 4, 2, &dims, "a");
        let prefs = GlobalPreference::new(vec![
            PreferenceVector::new(vec![0.3, 0.7]).unwrap(),
            PreferenceVector::new(vec![0.6, 0.4]).unwrap(),
        ]);
        let obs = vec![0.2, -0.4, 0.9, 0.1];
        let state = vec![0.0; 6];
        let joint = vec![vec![0.0, 0.0], vec![0.5, -0.5]];
        (actor, prefs, obs, state, joint)
    }

    #[test]
    fn zero_candidates_returns_the_plain_action() {
        let (actor, prefs, obs, state, joint) = setup();
        let mut rng = StdRng::seed_from_u64(0);
        let picked = gpi_select_action(
            &actor, &ZeroCritic, 0, &obs, &state, &joint, &prefs, &mut rng, 0,
        )
        .unwrap();
        let plain = actor.act(&obs, Some(&prefs.flatten())).unwrap();
        assert_eq!(picked, plain);
    }

    #[test]
    fn selected_action_never_scores_below_plain() {
        let (actor, prefs, obs, state, joint) = setup();
        let critic = FavorAction { target: vec![0.9, -0.9] };
        for seed in 0..20 {
            let mut rng = StdRng::seed_from_u64(seed);
            let picked = gpi_select_action(
                &actor, &critic, 0, &obs, &state, &joint, &prefs, &mut rng, 8,
            )
            .unwrap();
            let score = |a: &Vec<f64>| {
                let mut j = joint.clone();
                j[0] = a.clone();
                let q = critic.q_values(0, &state, &j, &prefs).unwrap();
                prefs.agent(0).scalarize(&q).unwrap()
            };
            let plain = actor.act(&obs, Some(&prefs.flatten())).unwrap();
            assert!(score(&picked) >= score(&plain));
        }
    }

    #[test]
    fn critic_that_prefers_a_candidate_gets_it_selected() {
        // Build a critic that strictly prefers whatever action candidate
        // preference ~ (1, 0) induces, then verify that exact action wins.
        let (actor, prefs, obs, state, joint) = setup();
        let mut rng = StdRng::seed_from_u64(9);
        // Reproduce the candidate list the selector will draw.
        let mut probe_rng = rng.clone();
        let mut candidate_actions = vec![actor.act(&obs, Some(&prefs.flatten())).unwrap()];
        for _ in 0..6 {
            let w = sample_uniform_simplex(&mut probe_rng, 2).unwrap();
            let mut cand: Vec<PreferenceVector> = prefs.iter().cloned().collect();
            cand[0] = w;
            candidate_actions.push(actor.act(&obs, Some(&GlobalPreference::new(cand).flatten())).unwrap());
        }
        let starred = candidate_actions[3].clone();
        let critic = FavorAction { target: starred.clone() };
        let picked = gpi_select_action(
            &actor, &critic, 0, &obs, &state, &joint, &prefs, &mut rng, 6,
        )
        .unwrap();
        assert_eq!(picked, starred);
    }
}
