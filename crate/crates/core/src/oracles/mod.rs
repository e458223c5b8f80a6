//! Independent ground truth: tabular dynamic programming and enumeration,
//! the counterexample showing the max-min objective lacks optimal
//! substructure, and the centralized open-loop optimum of the formation game.

mod counterexample;
mod openloop;
mod tabular;

pub use counterexample::{counterexample_game, dp_counterexample, Verdict};
pub use openloop::{optimal_openloop, require_deterministic, OpenLoopConfig, OpenLoopPlan};
pub use tabular::{
    brute_force_from, brute_force_minmax, chain_mdp, one_step_maxmin, value_iteration, MinMaxPlan, QTable,
    TabularGame, TabularModel, ENUMERATION_LIMIT,
};
