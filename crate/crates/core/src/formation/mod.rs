//! Formation-control Markov game on the plane.
//!
//! Each agent moves by `s' = s + B a` with `a` in the unit box and
//! `B = [[1, 0], [-1, 2]]`. Agent `i` is rewarded by the negated sum of
//! relative-position errors over the pairs in its closed neighborhood, so the
//! reward is zero exactly when the neighborhood sits in a translate of the
//! desired formation.

mod local;
mod rollout;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::JointState;
use crate::topology::Topology;

pub use local::{local_generative_model, FormationRollout, LocalFormationModel};
pub use rollout::{rollout_action, rollout_converge, ConvergeOutcome, RolloutConfig};

/// The action-coupling matrix, row-major.
pub const DYNAMICS: [[f64; 2]; 2] = [[1.0, 0.0], [-1.0, 2.0]];

pub fn dynamics_det() -> f64 {
    DYNAMICS[0][0] * DYNAMICS[1][1] - DYNAMICS[0][1] * DYNAMICS[1][0]
}

/// `B a`.
pub fn apply_dynamics(a: [f64; 2]) -> [f64; 2] {
    [
        DYNAMICS[0][0] * a[0] + DYNAMICS[0][1] * a[1],
        DYNAMICS[1][0] * a[0] + DYNAMICS[1][1] * a[1],
    ]
}

/// `s + B a`; the action must lie in `[0, 1]^2`.
pub fn step_dynamics(s: [f64; 2], a: [f64; 2]) -> Result<[f64; 2]> {
    if a.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::arg(format!("action {a:?} is outside the unit box")));
    }
    let d = apply_dynamics(a);
    Ok([s[0] + d[0], s[1] + d[1]])
}

/// Whether each unordered pair of a neighborhood is counted once or twice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    #[default]
    Unordered,
    Ordered,
}

impl PairMode {
    fn factor(self) -> f64 {
        match self {
            PairMode::Unordered => 1.0,
            PairMode::Ordered => 2.0,
        }
    }
}

/// Negated sum over pairs `j < l` of `|| (s_j - s_l) - (d_j - d_l) ||`, for
/// 2-D positions flattened agent-major.
pub fn slice_reward(state: &[f64], desired: &[f64], mode: PairMode) -> f64 {
    let m = state.len() / 2;
    let mut total = 0.0;
    for j in 0..m {
        for l in j + 1..m {
            let ex = (state[2 * j] - state[2 * l]) - (desired[2 * j] - desired[2 * l]);
            let ey = (state[2 * j + 1] - state[2 * l + 1]) - (desired[2 * j + 1] - desired[2 * l + 1]);
            total += ex.hypot(ey);
        }
    }
    -mode.factor() * total
}

/// Desired per-agent positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationSpec {
    pub desired: Vec<[f64; 2]>,
}

impl FormationSpec {
    pub fn new(desired: Vec<[f64; 2]>) -> Result<Self> {
        if desired.is_empty() {
            return Err(Error::arg("a formation needs at least one agent"));
        }
        Ok(Self { desired })
    }

    /// Vertices of a regular polygon of the given circumradius, agent 1 at angle 0.
    pub fn regular_polygon(n: usize, radius: f64) -> Self {
        let desired = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                [radius * th.cos(), radius * th.sin()]
            })
            .collect();
        Self { desired }
    }

    pub fn n_agents(&self) -> usize {
        self.desired.len()
    }

    /// Desired positions of `members`, flattened.
    pub fn slice(&self, members: &[usize]) -> Vec<f64> {
        members.iter().flat_map(|&j| self.desired[j]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormationEnv {
    pub spec: FormationSpec,
    pub pair_mode: PairMode,
}

impl FormationEnv {
    pub fn new(spec: FormationSpec, pair_mode: PairMode) -> Self {
        Self { spec, pair_mode }
    }

    pub fn n_agents(&self) -> usize {
        self.spec.n_agents()
    }

    fn check(&self, state: &JointState) -> Result<()> {
        if state.dim() != 2 || state.n_agents() != self.n_agents() {
            return Err(Error::arg(format!(
                "state holds {} agents of dimension {}, environment has {} planar agents",
                state.n_agents(),
                state.dim(),
                self.n_agents()
            )));
        }
        Ok(())
    }

    /// Reward of agent `i`, which only reads the neighborhood slice of `state`.
    pub fn local_reward(&self, state: &JointState, topology: &Topology, i: usize) -> Result<f64> {
        self.check(state)?;
        let members = topology.neighborhood(i)?;
        let slice = state.project(&members)?;
        Ok(slice_reward(&slice, &self.spec.slice(&members), self.pair_mode))
    }

    pub fn rewards(&self, state: &JointState, topology: &Topology) -> Result<Vec<f64>> {
        (0..self.n_agents())
            .map(|i| self.local_reward(state, topology, i))
            .collect()
    }

    pub fn step(&self, state: &JointState, action: &JointState) -> Result<JointState> {
        self.check(state)?;
        if action.dim() != 2 || action.n_agents() != self.n_agents() {
            return Err(Error::arg("joint action does not match the environment"));
        }
        let mut next = state.clone();
        for i in 0..self.n_agents() {
            let s = state.agent(i);
            let a = action.agent(i);
            let n = step_dynamics([s[0], s[1]], [a[0], a[1]])?;
            next.agent_mut(i).copy_from_slice(&n);
        }
        Ok(next)
    }
}
