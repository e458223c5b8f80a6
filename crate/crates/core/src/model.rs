//! The generative-model contract consumed by the planner.

use rand::{Rng, RngCore};

use crate::error::Result;
use crate::space::ActionBox;

/// The set an agent neighborhood may act in.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpace {
    Box(ActionBox),
    /// A finite list of action vectors; sampling is uniform over the list.
    Finite(Vec<Vec<f64>>),
}

impl ActionSpace {
    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Box(b) => b.dim(),
            ActionSpace::Finite(list) => list.first().map_or(0, Vec::len),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            ActionSpace::Box(b) => b.sample(rng),
            ActionSpace::Finite(list) => list[rng.random_range(0..list.len())].clone(),
        }
    }

    /// Number of actions of a finite space.
    pub fn count(&self) -> Option<usize> {
        match self {
            ActionSpace::Box(_) => None,
            ActionSpace::Finite(list) => Some(list.len()),
        }
    }

    /// Uniform draw among the actions not listed in `tried`; a box space
    /// ignores `tried`. `None` when a finite space is exhausted.
    pub fn sample_untried<R: Rng + ?Sized>(&self, tried: &[&[f64]], rng: &mut R) -> Option<Vec<f64>> {
        match self {
            ActionSpace::Box(b) => Some(b.sample(rng)),
            ActionSpace::Finite(list) => {
                let fresh: Vec<&Vec<f64>> = list
                    .iter()
                    .filter(|a| !tried.contains(&a.as_slice()))
                    .collect();
                if fresh.is_empty() {
                    None
                } else {
                    Some(fresh[rng.random_range(0..fresh.len())].clone())
                }
            }
        }
    }

    pub fn contains(&self, a: &[f64]) -> bool {
        match self {
            ActionSpace::Box(b) => b.contains(a),
            ActionSpace::Finite(list) => list.iter().any(|x| x.as_slice() == a),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub next_state: Vec<f64>,
    pub reward: f64,
}

/// Samples neighborhood transitions for one agent: given the neighborhood
/// state and action slices, returns the next neighborhood slice and the
/// owning agent's local reward.
///
/// Implementations must be safe to sample concurrently as long as each caller
/// brings its own randomness source.
pub trait GenerativeModel: Send + Sync {
    fn state_dim(&self) -> usize;

    fn action_space(&self) -> &ActionSpace;

    fn discount(&self) -> f64;

    /// Number of decision steps left in the episode from the planning root.
    fn horizon(&self) -> usize;

    /// Deterministic models always return the same transition for the same
    /// inputs and never touch `rng`.
    fn is_deterministic(&self) -> bool;

    fn sample(&self, state: &[f64], action: &[f64], rng: &mut dyn RngCore) -> Result<Transition>;
}
