//! Distributed stochastic subgradient solver for `min_alpha max_i f_i(alpha)`.
//!
//! Every agent keeps an estimate `(alpha, eta)` of the optimizer and the optimal
//! value. A round consists of a message exchange restricted to graph
//! neighbors, a consensus mix with doubly stochastic weights, and a projected
//! subgradient step on `r_i * max{0, f_i(alpha) - eta} + eta / N`.

mod message;
mod solver;
mod weights;

pub use message::{LocalityAudit, MessageBus, Violation};
pub use solver::{
    disagreement, init_iterates, mix, run, step, write_trace_csv, AgentIterate, FnObjective,
    LocalObjective, MinMaxRun, Noise, OptimizerConfig, StepRule, TraceRow,
};
pub use weights::{metropolis, metropolis_weights, ConsensusWeights};
