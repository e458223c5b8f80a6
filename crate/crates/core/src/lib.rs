//! Distributed online planning for max-min (egalitarian) networked Markov games.
//!
//! Each agent plans over its neighborhood with a progressive-widening Monte Carlo
//! tree search, fits a convex max-affine surrogate of its cumulative cost, and the
//! network agrees on the next joint action by running a distributed subgradient
//! min-max solver over neighbor-to-neighbor messages.
//!
//! Module map:
//!
//! - [`topology`], [`space`], [`model`]: the networked game abstraction.
//! - [`planner`]: tree search with double progressive widening and UCB1.
//! - [`maxaffine`]: convex piecewise-linear regression and subgradients.
//! - [`minmax`]: consensus weights, the message layer and the min-max solver.
//! - [`formation`]: the formation-control environment and its rollout policy.
//! - [`oracles`]: value iteration, brute-force min-max, the dynamic-programming
//!   counterexample and the centralized open-loop optimum.
//! - [`harness`]: experiment configuration, runners, run records and reports.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod formation;
pub mod harness;
pub mod maxaffine;
pub mod minmax;
pub mod model;
pub mod oracles;
pub mod planner;
pub mod rng;
pub mod space;
pub mod topology;
pub mod verify;

pub use error::{Error, Result};
pub use formation::{FormationEnv, FormationSpec, PairMode, RolloutConfig};
pub use maxaffine::{FitConfig, MaxAffineModel};
pub use minmax::{AgentIterate, ConsensusWeights, LocalityAudit, OptimizerConfig};
pub use model::{ActionSpace, GenerativeModel, Transition};
pub use planner::{PlannerConfig, QSample};
pub use space::{ActionBox, JointAction, JointState, JointVec};
pub use topology::{Topology, TopologySchedule};
