//! Neighborhood-restricted views of the formation game used by each agent's planner.

use rand::RngCore;

use super::rollout::{rollout_action, rollout_converge, RolloutConfig};
use super::{slice_reward, step_dynamics, FormationSpec, PairMode};
use crate::error::{Error, Result};
use crate::model::{ActionSpace, GenerativeModel, Transition};
use crate::planner::RolloutPolicy;
use crate::space::ActionBox;
use crate::topology::Topology;

/// Deterministic model over the closed neighborhood of one agent: every
/// member follows the planar dynamics and the reward sums over all member pairs.
#[derive(Debug, Clone)]
pub struct LocalFormationModel {
    members: Vec<usize>,
    desired: Vec<f64>,
    pair_mode: PairMode,
    discount: f64,
    horizon: usize,
    actions: ActionSpace,
}

impl LocalFormationModel {
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn desired(&self) -> &[f64] {
        &self.desired
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_discount(mut self, discount: f64) -> Self {
        self.discount = discount;
        self
    }
}

/// Model for agent `i` over `N_i` of `topology`, with undiscounted rewards
/// and an unbounded horizon (callers adjust both via the builder methods).
pub fn local_generative_model(
    topology: &Topology,
    spec: &FormationSpec,
    i: usize,
    pair_mode: PairMode,
) -> Result<LocalFormationModel> {
    if spec.n_agents() != topology.n_agents() {
        return Err(Error::arg("formation and topology disagree on the number of agents"));
    }
    let members = topology.neighborhood(i)?;
    let desired = spec.slice(&members);
    let actions = ActionSpace::Box(ActionBox::unit(2 * members.len()));
    Ok(LocalFormationModel {
        members,
        desired,
        pair_mode,
        discount: 1.0,
        horizon: usize::MAX,
        actions,
    })
}

impl GenerativeModel for LocalFormationModel {
    fn state_dim(&self) -> usize {
        2 * self.members.len()
    }

    fn action_space(&self) -> &ActionSpace {
        &self.actions
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn sample(&self, state: &[f64], action: &[f64], _rng: &mut dyn RngCore) -> Result<Transition> {
        let dim = self.state_dim();
        if state.len() != dim || action.len() != dim {
            return Err(Error::Model(format!(
                "expected state and action of length {dim}, got {} and {}",
                state.len(),
                action.len()
            )));
        }
        let mut next = Vec::with_capacity(dim);
        for (s, a) in state.chunks_exact(2).zip(action.chunks_exact(2)) {
            let n = step_dynamics([s[0], s[1]], [a[0], a[1]]).map_err(|e| Error::Model(e.to_string()))?;
            next.extend_from_slice(&n);
        }
        let reward = slice_reward(&next, &self.desired, self.pair_mode);
        Ok(Transition {
            next_state: next,
            reward,
        })
    }
}

/// Default policy: integrate the formation flow on the complete graph over
/// the neighborhood, then move each member one lookahead step toward its
/// converged position; repeat for the remaining depth.
#[derive(Debug, Clone)]
pub struct FormationRollout {
    desired: Vec<f64>,
    graph: Topology,
    cfg: RolloutConfig,
}

impl FormationRollout {
    pub fn new(model: &LocalFormationModel, cfg: RolloutConfig) -> Result<Self> {
        Ok(Self {
            desired: model.desired.clone(),
            graph: Topology::complete(model.members.len())?,
            cfg,
        })
    }

    /// Lookahead actions for every member from `state`.
    pub fn actions(&self, state: &[f64]) -> Result<Vec<f64>> {
        let target = rollout_converge(state, &self.desired, &self.graph, &self.cfg)?.state;
        let mut out = Vec::with_capacity(state.len());
        for (s, t) in state.chunks_exact(2).zip(target.chunks_exact(2)) {
            out.extend(rollout_action([s[0], s[1]], [t[0], t[1]], self.cfg.lookahead_iters));
        }
        Ok(out)
    }
}

impl RolloutPolicy for FormationRollout {
    fn estimate(
        &self,
        model: &dyn GenerativeModel,
        state: &[f64],
        remaining: usize,
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        let gamma = model.discount();
        let mut s = state.to_vec();
        let (mut total, mut scale) = (0.0, 1.0);
        for _ in 0..remaining {
            let a = self.actions(&s)?;
            let tr = model.sample(&s, &a, rng)?;
            total += scale * tr.reward;
            scale *= gamma;
            s = tr.next_state;
        }
        Ok(total)
    }
}
