//! Evaluation metrics: global utility over seeded initial states,
//! Pareto filtering, and hypervolume (exact for 2 and 3 objectives,
//! Monte-Carlo for verification).

mod gu;
mod pareto;

pub use gu::{
    build_front_from_sweep, evaluate_gu, preference_grid, rollout_episode, EpisodeEval, GuReport,
    PrefMode, RolloutPolicy, SweepResult,
};
pub use pareto::{dominates, hypervolume_exact, hypervolume_mc, pareto_filter, ParetoFront};
