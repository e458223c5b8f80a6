use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formation::{FormationEnv, DYNAMICS};
use crate::model::GenerativeModel;
use crate::space::{JointAction, JointState, JointVec};
use crate::topology::TopologySchedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpenLoopConfig {
    pub n_iters: usize,
    /// Step `c / sqrt(k + 1)` along the normalized subgradient.
    pub step_scale: f64,
    /// Record the best value every this many iterations.
    pub trace_every: usize,
}

impl Default for OpenLoopConfig {
    fn default() -> Self {
        Self {
            n_iters: 200_000,
            step_scale: 1.0,
            trace_every: 1000,
        }
    }
}

impl OpenLoopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::Config(format!("step_scale must be positive, got {}", self.step_scale)));
        }
        if self.trace_every == 0 {
            return Err(Error::Config("trace_every must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpenLoopPlan {
    pub actions: Vec<JointAction>,
    /// Worst-agent cumulative cost `max_i sum_t -r_t^i`.
    pub value: f64,
    pub costs: Vec<f64>,
    /// `rewards[t][i]`, re-simulated through the environment.
    pub rewards: Vec<Vec<f64>>,
    /// `(iteration, best value so far)`.
    pub trace: Vec<(usize, f64)>,
}

/// Refuses stochastic models; open-loop planning eliminates states through
/// the dynamics, which only works when they are deterministic.
pub fn require_deterministic(model: &dyn GenerativeModel) -> Result<()> {
    if model.is_deterministic() {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "open-loop optimization needs deterministic dynamics".into(),
        ))
    }
}

struct Problem<'a> {
    n: usize,
    horizon: usize,
    initial: &'a [f64],
    desired: Vec<f64>,
    factor: f64,
    /// Pairs `(j, l)` of every agent's neighborhood at every step: `pairs[t][i]`.
    pairs: Vec<Vec<Vec<(usize, usize)>>>,
}

impl Problem<'_> {
    fn idx(&self, t: usize, i: usize) -> usize {
        (t * self.n + i) * 2
    }

    /// Positions after every step, `states[t]` being `s_{t+1}`.
    fn states(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut s = self.initial.to_vec();
        let mut out = Vec::with_capacity(self.horizon);
        for t in 0..self.horizon {
            for i in 0..self.n {
                let k = self.idx(t, i);
                let (a, b) = (x[k], x[k + 1]);
                s[2 * i] += DYNAMICS[0][0] * a + DYNAMICS[0][1] * b;
                s[2 * i + 1] += DYNAMICS[1][0] * a + DYNAMICS[1][1] * b;
            }
            out.push(s.clone());
        }
        out
    }

    fn error(&self, s: &[f64], j: usize, l: usize) -> (f64, f64) {
        let d = &self.desired;
        (
            (s[2 * j] - s[2 * l]) - (d[2 * j] - d[2 * l]),
            (s[2 * j + 1] - s[2 * l + 1]) - (d[2 * j + 1] - d[2 * l + 1]),
        )
    }

    fn costs(&self, states: &[Vec<f64>]) -> Vec<f64> {
        let mut costs = vec![0.0; self.n];
        for (t, s) in states.iter().enumerate() {
            for (i, c) in costs.iter_mut().enumerate() {
                for &(j, l) in &self.pairs[t][i] {
                    let (ex, ey) = self.error(s, j, l);
                    *c += self.factor * ex.hypot(ey);
                }
            }
        }
        costs
    }

    /// Subgradient of agent `i`'s cumulative cost with respect to all actions.
    fn subgradient(&self, states: &[Vec<f64>], i: usize, g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        // gradient with respect to positions, accumulated from the last step back
        let mut tail = vec![0.0; 2 * self.n];
        for t in (0..self.horizon).rev() {
            let s = &states[t];
            for &(j, l) in &self.pairs[t][i] {
                let (ex, ey) = self.error(s, j, l);
                let norm = ex.hypot(ey);
                if norm > 0.0 {
                    let (ux, uy) = (self.factor * ex / norm, self.factor * ey / norm);
                    tail[2 * j] += ux;
                    tail[2 * j + 1] += uy;
                    tail[2 * l] -= ux;
                    tail[2 * l + 1] -= uy;
                }
            }
            for m in 0..self.n {
                let k = self.idx(t, m);
                let (px, py) = (tail[2 * m], tail[2 * m + 1]);
                g[k] = DYNAMICS[0][0] * px + DYNAMICS[1][0] * py;
                g[k + 1] = DYNAMICS[0][1] * px + DYNAMICS[1][1] * py;
            }
        }
    }
}

fn worst(costs: &[f64]) -> (usize, f64) {
    costs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
}

/// Centralized open-loop plan minimizing the worst agent's cumulative
/// formation cost over `horizon` steps, by projected subgradient descent on
/// the actions with positions substituted through the dynamics. The reported
/// value is recomputed by stepping the environment.
pub fn optimal_openloop(
    env: &FormationEnv,
    schedule: &TopologySchedule,
    initial: &JointState,
    horizon: usize,
    cfg: &OpenLoopConfig,
) -> Result<OpenLoopPlan> {
    cfg.validate()?;
    let n = env.n_agents();
    if initial.n_agents() != n || initial.dim() != 2 || schedule.n_agents() != n {
        return Err(Error::arg("initial state, schedule and formation disagree on the agents"));
    }
    let mut pairs = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let topo = schedule.at(t);
        let mut per_agent = Vec::with_capacity(n);
        for i in 0..n {
            let members = topo.neighborhood(i)?;
            let mut list = Vec::new();
            for (a, &j) in members.iter().enumerate() {
                for &l in &members[a + 1..] {
                    list.push((j, l));
                }
            }
            per_agent.push(list);
        }
        pairs.push(per_agent);
    }
    let problem = Problem {
        n,
        horizon,
        initial: initial.as_slice(),
        desired: env.spec.desired.iter().flatten().copied().collect(),
        factor: match env.pair_mode {
            crate::formation::PairMode::Unordered => 1.0,
            crate::formation::PairMode::Ordered => 2.0,
        },
        pairs,
    };

    let dim = 2 * n * horizon;
    let mut x = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut best_x = x.clone();
    let mut best = worst(&problem.costs(&problem.states(&x))).1.max(0.0);
    let mut trace = vec![(0, best)];
    if horizon > 0 {
        for k in 0..cfg.n_iters {
            let states = problem.states(&x);
            let costs = problem.costs(&states);
            let (i, v) = worst(&costs);
            if !v.is_finite() {
                return Err(Error::Model(format!(
                    "open-loop solver diverged at iteration {k}; best values so far: {trace:?}"
                )));
            }
            if v < best {
                best = v;
                best_x.copy_from_slice(&x);
            }
            if (k + 1) % cfg.trace_every == 0 {
                trace.push((k + 1, best));
            }
            problem.subgradient(&states, i, &mut g);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let step = cfg.step_scale / ((k + 1) as f64).sqrt() / norm;
            for (xv, gv) in x.iter_mut().zip(&g) {
                *xv = (*xv - step * gv).clamp(0.0, 1.0);
            }
        }
        let last = worst(&problem.costs(&problem.states(&x))).1;
        if last < best {
            best = last;
            best_x.copy_from_slice(&x);
        }
    }

    // re-simulate through the environment
    let mut actions = Vec::with_capacity(horizon);
    let mut rewards = Vec::with_capacity(horizon);
    let mut costs = vec![0.0; n];
    let mut state = initial.clone();
    for t in 0..horizon {
        let k = problem.idx(t, 0);
        let a = JointVec::new(2, best_x[k..k + 2 * n].to_vec())?;
        state = env.step(&state, &a)?;
        let r = env.rewards(&state, schedule.at(t))?;
        for (c, ri) in costs.iter_mut().zip(&r) {
            *c -= ri;
        }
        actions.push(a);
        rewards.push(r);
    }
    let value = if horizon == 0 { 0.0 } else { worst(&costs).1 };
    if (value - best).abs() > 1e-9 * best.abs().max(1.0) {
        return Err(Error::Model(format!(
            "re-simulated open-loop value {value} differs from the optimized value {best}"
        )));
    }
    Ok(OpenLoopPlan {
        actions,
        value,
        costs,
        rewards,
        trace,
    })
}
