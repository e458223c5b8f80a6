use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionSpace, GenerativeModel, Transition};

/// Guard on the number of joint open-loop plans [`brute_force_minmax`] enumerates.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Finite deterministic Markov game. Joint actions are mixed-radix indices
/// with agent 0 most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularGame {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub n_states: usize,
    pub action_counts: Vec<usize>,
    /// Optional numeric labels per agent action (for display only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_values: Option<Vec<Vec<f64>>>,
    pub initial_state: usize,
    pub horizon: usize,
    pub discount: f64,
    /// `transitions[state][joint]`.
    pub transitions: Vec<Vec<usize>>,
    /// `rewards[agent][state][joint]`.
    pub rewards: Vec<Vec<Vec<f64>>>,
}

impl TabularGame {
    pub fn from_json(s: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(s)?;
        g.validate()?;
        Ok(g)
    }

    pub fn n_agents(&self) -> usize {
        self.action_counts.len()
    }

    pub fn n_joint(&self) -> usize {
        self.action_counts.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.n_joint();
        if self.action_counts.is_empty() || j == 0 {
            return Err(Error::arg("every agent needs at least one action"));
        }
        if self.initial_state >= self.n_states || self.transitions.len() != self.n_states {
            return Err(Error::arg("transition table does not cover every state"));
        }
        if self.transitions.iter().flatten().any(|&s| s >= self.n_states)
            || self.transitions.iter().any(|row| row.len() != j)
        {
            return Err(Error::arg("transition table is not total over (state, joint action)"));
        }
        if self.rewards.len() != self.n_agents()
            || self
                .rewards
                .iter()
                .any(|t| t.len() != self.n_states || t.iter().any(|row| row.len() != j))
        {
            return Err(Error::arg("reward tables do not match the state and action counts"));
        }
        Ok(())
    }

    pub fn joint_index(&self, actions: &[usize]) -> usize {
        actions
            .iter()
            .zip(&self.action_counts)
            .fold(0, |acc, (&a, &n)| acc * n + a)
    }

    pub fn decode(&self, mut joint: usize) -> Vec<usize> {
        let mut out = vec![0; self.n_agents()];
        for (slot, &n) in out.iter_mut().zip(&self.action_counts).rev() {
            *slot = joint % n;
            joint /= n;
        }
        out
    }

    /// Per-agent discounted returns of an open-loop plan of joint actions.
    pub fn evaluate(&self, start: usize, plan: &[usize]) -> Vec<f64> {
        let mut totals = vec![0.0; self.n_agents()];
        let (mut s, mut scale) = (start, 1.0);
        for &a in plan {
            for (tot, table) in totals.iter_mut().zip(&self.rewards) {
                *tot += scale * table[s][a];
            }
            s = self.transitions[s][a];
            scale *= self.discount;
        }
        totals
    }

    /// Same game with the actions of `agent` relabeled by `perm` (new index `k`
    /// behaves like old index `perm[k]`).
    pub fn relabel(&self, agent: usize, perm: &[usize]) -> Self {
        let mut g = self.clone();
        for joint in 0..self.n_joint() {
            let mut acts = self.decode(joint);
            acts[agent] = perm[acts[agent]];
            let old = self.joint_index(&acts);
            for s in 0..self.n_states {
                g.transitions[s][joint] = self.transitions[s][old];
                for i in 0..self.n_agents() {
                    g.rewards[i][s][joint] = self.rewards[i][s][old];
                }
            }
        }
        g
    }
}

/// The three-state chain fixture used to validate the planner.
pub fn chain_mdp() -> TabularGame {
    TabularGame::from_json(include_str!("../../fixtures/chain_mdp.json")).expect("valid fixture")
}

/// `q[stage][state][action]`, where stage `t` has `horizon - t` steps left.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub q: Vec<Vec<Vec<f64>>>,
}

impl QTable {
    pub fn value(&self, stage: usize, state: usize) -> f64 {
        self.q[stage][state].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Finite-horizon backward induction for a single-agent game:
/// `Q_t(s, a) = R(s, a) + gamma * max_a' Q_{t+1}(s', a')`.
pub fn value_iteration(game: &TabularGame) -> Result<QTable> {
    game.validate()?;
    if game.n_agents() != 1 {
        return Err(Error::Unsupported(format!(
            "value iteration needs a single agent, got {}",
            game.n_agents()
        )));
    }
    let na = game.action_counts[0];
    let mut q = vec![vec![vec![0.0; na]; game.n_states]; game.horizon];
    let mut next_v = vec![0.0; game.n_states];
    for t in (0..game.horizon).rev() {
        for s in 0..game.n_states {
            for a in 0..na {
                q[t][s][a] = game.rewards[0][s][a] + game.discount * next_v[game.transitions[s][a]];
            }
        }
        next_v = (0..game.n_states)
            .map(|s| q[t][s].iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
    }
    Ok(QTable { q })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxPlan {
    /// Joint action index per timestep.
    pub plan: Vec<usize>,
    /// `min_i` of the per-agent returns.
    pub value: f64,
    pub returns: Vec<f64>,
}

/// Enumerates every joint open-loop plan from `start` over `horizon` steps and
/// keeps the first plan maximizing the worst agent's return.
pub fn brute_force_from(game: &TabularGame, start: usize, horizon: usize) -> Result<MinMaxPlan> {
    game.validate()?;
    let j = game.n_joint() as u128;
    let count = (0..horizon).try_fold(1u128, |acc, _| acc.checked_mul(j)).unwrap_or(u128::MAX);
    if count > ENUMERATION_LIMIT {
        return Err(Error::SizeGuard {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut best: Option<MinMaxPlan> = None;
    let mut plan = vec![0usize; horizon];
    for code in 0..count {
        let mut c = code;
        for slot in plan.iter_mut().rev() {
            *slot = (c % j) as usize;
            c /= j;
        }
        let returns = game.evaluate(start, &plan);
        let value = returns.iter().copied().fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(MinMaxPlan {
                plan: plan.clone(),
                value,
                returns,
            });
        }
    }
    Ok(best.expect("at least the empty plan"))
}

/// Exact max-min open-loop plan from the game's initial state.
pub fn brute_force_minmax(game: &TabularGame) -> Result<MinMaxPlan> {
    brute_force_from(game, game.initial_state, game.horizon)
}

/// Best single joint action at `state` for the one-step max-min subproblem.
pub fn one_step_maxmin(game: &TabularGame, state: usize) -> Result<(usize, f64)> {
    let p = brute_force_from(game, state, 1)?;
    Ok((p.plan[0], p.value))
}

/// Single-agent tabular game as a generative model with a finite action list;
/// states and actions are encoded as one-element vectors.
#[derive(Debug, Clone)]
pub struct TabularModel {
    game: TabularGame,
    actions: ActionSpace,
}

impl TabularModel {
    pub fn new(game: TabularGame) -> Result<Self> {
        game.validate()?;
        if game.n_agents() != 1 {
            return Err(Error::Unsupported("tabular models wrap single-agent games".into()));
        }
        let actions = ActionSpace::Finite((0..game.action_counts[0]).map(|a| vec![a as f64]).collect());
        Ok(Self { game, actions })
    }
}

impl GenerativeModel for TabularModel {
    fn state_dim(&self) -> usize {
        1
    }

    fn action_space(&self) -> &ActionSpace {
        &self.actions
    }

    fn discount(&self) -> f64 {
        self.game.discount
    }

    fn horizon(&self) -> usize {
        self.game.horizon
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn sample(&self, state: &[f64], action: &[f64], _rng: &mut dyn RngCore) -> Result<Transition> {
        let s = state[0] as usize;
        let a = action[0] as usize;
        if s >= self.game.n_states || a >= self.game.action_counts[0] {
            return Err(Error::Model(format!("state {s} / action {a} outside the table")));
        }
        Ok(Transition {
            next_state: vec![self.game.transitions[s][a] as f64],
            reward: self.game.rewards[0][s][a],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Best return over all action sequences, by enumeration.
    fn enumerate_best(game: &TabularGame, start: usize, first: usize, steps: usize) -> f64 {
        let na = game.action_counts[0];
        let rest = steps - 1;
        (0..na.pow(rest as u32))
            .map(|code| {
                let mut plan = vec![first];
                let mut c = code;
                for _ in 0..rest {
                    plan.push(c % na);
                    c /= na;
                }
                game.evaluate(start, &plan)[0]
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn chain_q_matches_enumeration() {
        let g = chain_mdp();
        let q = value_iteration(&g).unwrap();
        for t in 0..g.horizon {
            for s in 0..g.n_states {
                for a in 0..2 {
                    let want = enumerate_best(&g, s, a, g.horizon - t);
                    assert!((q.q[t][s][a] - want).abs() < 1e-12, "t={t} s={s} a={a}");
                }
            }
        }
        // frozen from the enumeration above
        assert!((q.q[0][0][0] - 0.829).abs() < 1e-12);
        assert!((q.q[0][0][1] - 1.539).abs() < 1e-12);
    }

    #[test]
    fn horizon_one_is_the_reward_table() {
        let mut g = chain_mdp();
        g.horizon = 1;
        let q = value_iteration(&g).unwrap();
        assert_eq!(q.q[0], g.rewards[0]);
    }

    #[test]
    fn zero_rewards_give_zero_q() {
        let mut g = chain_mdp();
        g.rewards = vec![vec![vec![0.0; 2]; 3]];
        let q = value_iteration(&g).unwrap();
        assert!(q.q.iter().flatten().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn value_iteration_rejects_games() {
        let g = TabularGame::from_json(include_str!("../../fixtures/counterexample.json")).unwrap();
        assert!(matches!(value_iteration(&g), Err(Error::Unsupported(_))));
    }

    fn two_agent_one_step() -> TabularGame {
        TabularGame {
            description: String::new(),
            n_states: 2,
            action_counts: vec![2, 2],
            action_values: None,
            initial_state: 0,
            horizon: 1,
            discount: 1.0,
            transitions: vec![vec![1; 4], vec![1; 4]],
            rewards: vec![
                vec![vec![3.0, 1.0, 4.0, 0.0], vec![0.0; 4]],
                vec![vec![2.0, 5.0, 1.0, 9.0], vec![0.0; 4]],
            ],
        }
    }

    #[test]
    fn one_timestep_is_direct_maxmin() {
        let g = two_agent_one_step();
        let best = brute_force_minmax(&g).unwrap();
        // mins per joint action: 2, 1, 1, 0
        assert_eq!(best.plan, vec![0]);
        assert_eq!(best.value, 2.0);
    }

    #[test]
    fn dominating_plan_is_found() {
        let mut g = two_agent_one_step();
        g.rewards[0][0][3] = 10.0;
        g.rewards[1][0][3] = 10.0;
        assert_eq!(brute_force_minmax(&g).unwrap().plan, vec![3]);
    }

    #[test]
    fn relabeling_actions_keeps_the_value() {
        let g = TabularGame::from_json(include_str!("../../fixtures/counterexample.json")).unwrap();
        let base = brute_force_minmax(&g).unwrap().value;
        for agent in 0..2 {
            assert_eq!(brute_force_minmax(&g.relabel(agent, &[1, 0])).unwrap().value, base);
        }
    }

    #[test]
    fn size_guard_refuses_large_games() {
        let mut g = two_agent_one_step();
        g.horizon = 11; // 4^11 > 1e6
        match brute_force_minmax(&g) {
            Err(Error::SizeGuard { count, .. }) => assert_eq!(count, 4u128.pow(11)),
            other => panic!("expected a size guard error, got {other:?}"),
        }
    }

    #[test]
    fn joint_index_round_trip() {
        let g = TabularGame {
            action_counts: vec![2, 3, 4],
            ..two_agent_one_step()
        };
        for j in 0..24 {
            assert_eq!(g.joint_index(&g.decode(j)), j);
        }
    }
}
