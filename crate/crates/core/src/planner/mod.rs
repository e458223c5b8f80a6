//! Per-agent online planner: Monte Carlo tree search over the neighborhood
//! action space with double progressive widening and UCB1 selection.
//!
//! Observations equal states, so tree nodes are keyed directly by
//! `(depth, neighborhood state)`. For deterministic models every action child
//! holds exactly one outcome, created on its first visit.

mod log;
mod select;
mod tree;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GenerativeModel;
use crate::rng::SimRng;

pub use log::QueryRecord;
pub use select::{ucb1_select, widen, ChildStats, SelectionRule, Ucb1, Widen};
pub use tree::{ActionChild, NodeId, SearchTree, StateNode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    /// Number of tree queries from the root.
    pub n_queries: usize,
    pub max_depth: usize,
    pub ucb_c: f64,
    pub k_action: f64,
    pub alpha_action: f64,
    pub k_outcome: f64,
    pub alpha_outcome: f64,
    pub rng_seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            n_queries: 100,
            max_depth: 5,
            ucb_c: 1.0,
            k_action: 2.0,
            alpha_action: 0.5,
            k_outcome: 0.0,
            alpha_outcome: 0.5,
            rng_seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |a: f64| a > 0.0 && a <= 1.0;
        if self.n_queries == 0 {
            return Err(Error::Config("planner.n_queries must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("planner.max_depth must be at least 1".into()));
        }
        if !(self.ucb_c >= 0.0) || !(self.k_action >= 0.0) || !(self.k_outcome >= 0.0) {
            return Err(Error::Config(
                "planner ucb_c, k_action and k_outcome must be nonnegative".into(),
            ));
        }
        if !unit(self.alpha_action) || !unit(self.alpha_outcome) {
            return Err(Error::Config(
                "planner alpha_action and alpha_outcome must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// A first-level action of the search tree with its mean return.
#[derive(Debug, Clone, PartialEq)]
pub struct QSample {
    pub action: Vec<f64>,
    pub value: f64,
    pub visits: u64,
}

/// Estimates the return-to-go from a leaf by simulating a default policy.
pub trait RolloutPolicy: Send + Sync {
    fn estimate(
        &self,
        model: &dyn GenerativeModel,
        state: &[f64],
        remaining: usize,
        rng: &mut dyn RngCore,
    ) -> Result<f64>;
}

/// Leaves are worth nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroRollout;

impl RolloutPolicy for ZeroRollout {
    fn estimate(&self, _: &dyn GenerativeModel, _: &[f64], _: usize, _: &mut dyn RngCore) -> Result<f64> {
        Ok(0.0)
    }
}

/// Uniformly random actions until the remaining depth is exhausted.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomRollout;

impl RolloutPolicy for RandomRollout {
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
            let a = model.action_space().sample(rng);
            let tr = model.sample(&s, &a, rng)?;
            total += scale * tr.reward;
            scale *= gamma;
            s = tr.next_state;
        }
        Ok(total)
    }
}

/// Everything a planning call produced.
#[derive(Debug)]
pub struct PlanOutput {
    pub samples: Vec<QSample>,
    pub tree: SearchTree,
    /// One record per query when logging is enabled.
    pub log: Vec<QueryRecord>,
}

pub struct Planner<'a> {
    model: &'a dyn GenerativeModel,
    rollout: &'a dyn RolloutPolicy,
    cfg: &'a PlannerConfig,
    selection: Box<dyn SelectionRule + 'a>,
    record: bool,
}

impl<'a> Planner<'a> {
    pub fn new(
        model: &'a dyn GenerativeModel,
        rollout: &'a dyn RolloutPolicy,
        cfg: &'a PlannerConfig,
    ) -> Self {
        Self {
            model,
            rollout,
            cfg,
            selection: Box::new(Ucb1 { c: cfg.ucb_c }),
            record: false,
        }
    }

    pub fn with_selection(mut self, rule: impl SelectionRule + 'a) -> Self {
        self.selection = Box::new(rule);
        self
    }

    pub fn with_log(mut self, record: bool) -> Self {
        self.record = record;
        self
    }

    pub fn run(&self, root: &[f64], rng: &mut SimRng) -> Result<PlanOutput> {
        self.cfg.validate()?;
        if root.len() != self.model.state_dim() {
            return Err(Error::arg(format!(
                "root state has dimension {}, model expects {}",
                root.len(),
                self.model.state_dim()
            )));
        }
        let depth = self.cfg.max_depth.min(self.model.horizon());
        if depth == 0 {
            return Err(Error::arg("model horizon is exhausted; nothing to plan"));
        }
        let mut tree = SearchTree::new(root.to_vec());
        let mut log = Vec::new();
        for query in 0..self.cfg.n_queries {
            let mut rec = QueryRecord::new(query);
            let ret = tree::simulate(self, &mut tree, SearchTree::ROOT, depth, rng, &mut rec)
                .map_err(|e| Error::Planner {
                    query,
                    depth: rec.actions.len(),
                    source: Box::new(e),
                })?;
            rec.ret = ret;
            if self.record {
                log.push(rec);
            }
        }
        let samples = tree
            .node(SearchTree::ROOT)
            .children
            .iter()
            .map(|c| QSample {
                action: c.action.clone(),
                value: c.q,
                visits: c.visits,
            })
            .collect();
        Ok(PlanOutput { samples, tree, log })
    }
}

/// Runs `cfg.n_queries` tree queries from `root` and returns one sample per
/// first-level action child. The planner RNG is seeded from `cfg.rng_seed`.
pub fn plan(
    root: &[f64],
    model: &dyn GenerativeModel,
    rollout: &dyn RolloutPolicy,
    cfg: &PlannerConfig,
) -> Result<Vec<QSample>> {
    use rand::SeedableRng;
    let mut rng = SimRng::seed_from_u64(cfg.rng_seed);
    Ok(Planner::new(model, rollout, cfg).run(root, &mut rng)?.samples)
}
