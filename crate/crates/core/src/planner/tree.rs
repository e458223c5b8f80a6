use std::collections::HashMap;

use rand::Rng;

use super::log::QueryRecord;
use super::select::{action_bound, outcome_limit, widen, ChildStats, Widen};
use super::Planner;
use crate::error::Result;
use crate::rng::SimRng;

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub node: NodeId,
    pub reward: f64,
    pub count: u64,
}

#[derive(Debug, Clone)]
pub struct ActionChild {
    pub action: Vec<f64>,
    pub visits: u64,
    /// Running mean of the returns propagated through this child.
    pub q: f64,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone)]
pub struct StateNode {
    pub depth: usize,
    pub state: Vec<f64>,
    pub visits: u64,
    pub children: Vec<ActionChild>,
}

/// Search graph with transpositions merged on `(depth, state)`.
#[derive(Debug, Clone)]
pub struct SearchTree {
    nodes: Vec<StateNode>,
    index: HashMap<(usize, Vec<u64>), NodeId>,
}

fn key(depth: usize, state: &[f64]) -> (usize, Vec<u64>) {
    (depth, state.iter().map(|v| v.to_bits()).collect())
}

impl SearchTree {
    pub const ROOT: NodeId = 0;

    pub(crate) fn new(root: Vec<f64>) -> Self {
        let mut tree = Self {
            nodes: Vec::new(),
            index: HashMap::new(),
        };
        tree.intern(0, root);
        tree
    }

    pub fn node(&self, id: NodeId) -> &StateNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[StateNode] {
        &self.nodes
    }

    /// Returns the node for `(depth, state)` and whether it was just created.
    fn intern(&mut self, depth: usize, state: Vec<f64>) -> (NodeId, bool) {
        let k = key(depth, &state);
        if let Some(&id) = self.index.get(&k) {
            return (id, false);
        }
        let id = self.nodes.len();
        self.nodes.push(StateNode {
            depth,
            state,
            visits: 0,
            children: Vec::new(),
        });
        self.index.insert(k, id);
        (id, true)
    }
}

/// One query step: widen or select an action, draw an outcome, recurse or roll out.
pub(super) fn simulate(
    planner: &Planner<'_>,
    tree: &mut SearchTree,
    node: NodeId,
    remaining: usize,
    rng: &mut SimRng,
    rec: &mut QueryRecord,
) -> Result<f64> {
    if remaining == 0 {
        return Ok(0.0);
    }
    let cfg = planner.cfg;
    let model = planner.model;
    tree.nodes[node].visits += 1;
    let visits = tree.nodes[node].visits;

    let n_children = tree.nodes[node].children.len();
    let exhausted = model.action_space().count().is_some_and(|k| n_children >= k);
    let decision = if exhausted {
        Widen::Descend
    } else {
        widen(visits, n_children, cfg)
    };
    let child_idx = match decision {
        Widen::SampleNew => {
            let children = &mut tree.nodes[node].children;
            let tried: Vec<&[f64]> = children.iter().map(|c| c.action.as_slice()).collect();
            let action = model
                .action_space()
                .sample_untried(&tried, rng)
                .expect("finite spaces are only widened while untried actions remain");
            match children.iter().position(|c| c.action == action) {
                Some(existing) => existing,
                None => {
                    children.push(ActionChild {
                        action,
                        visits: 0,
                        q: 0.0,
                        outcomes: Vec::new(),
                    });
                    children.len() - 1
                }
            }
        }
        Widen::Descend => {
            let stats: Vec<ChildStats> = tree.nodes[node]
                .children
                .iter()
                .map(|c| ChildStats {
                    q: c.q,
                    visits: c.visits,
                })
                .collect();
            planner.selection.select(visits, &stats)
        }
    };
    debug_assert!(
        tree.nodes[node].children.len() as f64 <= action_bound(visits, cfg).ceil().max(1.0),
        "action widening bound violated"
    );

    let depth = tree.nodes[node].depth;
    let action = tree.nodes[node].children[child_idx].action.clone();
    let child_visits = tree.nodes[node].children[child_idx].visits + 1;
    let n_outcomes = tree.nodes[node].children[child_idx].outcomes.len();
    let limit = if model.is_deterministic() {
        1
    } else {
        outcome_limit(child_visits, cfg)
    };

    let (next, reward, fresh) = if n_outcomes < limit {
        let state = tree.nodes[node].state.clone();
        let tr = model.sample(&state, &action, rng)?;
        let (id, fresh) = tree.intern(depth + 1, tr.next_state);
        let outcomes = &mut tree.nodes[node].children[child_idx].outcomes;
        match outcomes.iter_mut().find(|o| o.node == id) {
            Some(o) => o.count += 1,
            None => outcomes.push(Outcome {
                node: id,
                reward: tr.reward,
                count: 1,
            }),
        }
        (id, tr.reward, fresh)
    } else {
        let outcomes = &mut tree.nodes[node].children[child_idx].outcomes;
        let pick = if outcomes.len() == 1 {
            0
        } else {
            let total: u64 = outcomes.iter().map(|o| o.count).sum();
            let mut draw = rng.random_range(0..total);
            outcomes
                .iter()
                .position(|o| {
                    if draw < o.count {
                        true
                    } else {
                        draw -= o.count;
                        false
                    }
                })
                .unwrap_or(0)
        };
        outcomes[pick].count += 1;
        (outcomes[pick].node, outcomes[pick].reward, false)
    };

    rec.actions.push(action);
    rec.rewards.push(reward);
    let gamma = model.discount();
    // leaves at the depth limit are always valued by the rollout, so revisits
    // agree with the first visit
    let future = if fresh || remaining == 1 {
        let state = tree.nodes[next].state.clone();
        let v = planner
            .rollout
            .estimate(model, &state, remaining - 1, rng)?;
        rec.leaf_value = v;
        v
    } else {
        simulate(planner, tree, next, remaining - 1, rng, rec)?
    };
    let total = reward + gamma * future;

    let child = &mut tree.nodes[node].children[child_idx];
    child.visits += 1;
    child.q += (total - child.q) / child.visits as f64;
    if node == SearchTree::ROOT {
        rec.root_child = child_idx;
    }
    Ok(total)
}
