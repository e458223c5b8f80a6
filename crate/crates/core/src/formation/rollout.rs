//! Affine formation flow and the one-step lookahead used as the default policy.

use serde::{Deserialize, Serialize};

use super::{apply_dynamics, DYNAMICS};
use crate::error::{Error, Result};
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RolloutConfig {
    pub euler_dt: f64,
    pub total_time: f64,
    /// Integration stops once every agent's speed falls below this value.
    pub convergence_tol: f64,
    pub lookahead_iters: usize,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            euler_dt: 0.05,
            total_time: 50.0,
            convergence_tol: 1e-6,
            lookahead_iters: 200,
        }
    }
}

impl RolloutConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.euler_dt > 0.0 && self.total_time > 0.0 && self.convergence_tol > 0.0) {
            return Err(Error::Config(
                "rollout euler_dt, total_time and convergence_tol must be positive".into(),
            ));
        }
        if self.lookahead_iters == 0 {
            return Err(Error::Config("rollout.lookahead_iters must be positive".into()));
        }
        Ok(())
    }

    /// Euler step bound `dt < 2 / (2 * max_degree + 1)` for the flow on a graph.
    pub fn check_stable(&self, max_degree: usize) -> Result<()> {
        let bound = 2.0 / (2 * max_degree + 1) as f64;
        if self.euler_dt >= bound {
            return Err(Error::Config(format!(
                "euler_dt {} is not below the stability bound {bound} for max degree {max_degree}",
                self.euler_dt
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeOutcome {
    /// Final positions, flattened agent-major.
    pub state: Vec<f64>,
    pub converged: bool,
    pub steps: usize,
}

/// Euler-integrates `ds_i/dt = -sum_{j ~ i} [(s_i - s_j) - (d_i - d_j)]` over
/// `graph` (indices are slice positions) until every speed is below
/// `cfg.convergence_tol` or `cfg.total_time` elapses. A non-converged outcome
/// carries the last state.
pub fn rollout_converge(
    initial: &[f64],
    desired: &[f64],
    graph: &Topology,
    cfg: &RolloutConfig,
) -> Result<ConvergeOutcome> {
    cfg.validate()?;
    cfg.check_stable(graph.max_degree())?;
    let m = graph.n_agents();
    if initial.len() != 2 * m || desired.len() != 2 * m {
        return Err(Error::arg("slice sizes do not match the local graph"));
    }
    let max_steps = (cfg.total_time / cfg.euler_dt).ceil() as usize;
    let mut s = initial.to_vec();
    let mut vel = vec![0.0; 2 * m];
    for step in 0..max_steps {
        let mut fastest: f64 = 0.0;
        for i in 0..m {
            let (mut vx, mut vy) = (0.0, 0.0);
            for &j in graph.adjacent(i) {
                vx -= (s[2 * i] - s[2 * j]) - (desired[2 * i] - desired[2 * j]);
                vy -= (s[2 * i + 1] - s[2 * j + 1]) - (desired[2 * i + 1] - desired[2 * j + 1]);
            }
            vel[2 * i] = vx;
            vel[2 * i + 1] = vy;
            fastest = fastest.max(vx.hypot(vy));
        }
        if fastest < cfg.convergence_tol {
            return Ok(ConvergeOutcome {
                state: s,
                converged: true,
                steps: step,
            });
        }
        for (x, v) in s.iter_mut().zip(&vel) {
            *x += cfg.euler_dt * v;
        }
    }
    Ok(ConvergeOutcome {
        state: s,
        converged: false,
        steps: max_steps,
    })
}

/// `argmin_{a in [0,1]^2} || s + B a - target ||` by projected gradient descent.
pub fn rollout_action(current: [f64; 2], target: [f64; 2], iters: usize) -> [f64; 2] {
    let delta = [target[0] - current[0], target[1] - current[1]];
    // largest eigenvalue of B^T B is 3 + sqrt(5)
    let lipschitz = 2.0 * (3.0 + 5f64.sqrt());
    let step = 1.0 / lipschitz;
    let clip = |v: f64| v.clamp(0.0, 1.0);
    // warm start from the unconstrained solution B^-1 delta
    let det = super::dynamics_det();
    let mut a = [
        clip((DYNAMICS[1][1] * delta[0] - DYNAMICS[0][1] * delta[1]) / det),
        clip((-DYNAMICS[1][0] * delta[0] + DYNAMICS[0][0] * delta[1]) / det),
    ];
    for _ in 0..iters {
        let ba = apply_dynamics(a);
        let r = [ba[0] - delta[0], ba[1] - delta[1]];
        // gradient 2 B^T r
        let g = [
            2.0 * (DYNAMICS[0][0] * r[0] + DYNAMICS[1][0] * r[1]),
            2.0 * (DYNAMICS[0][1] * r[0] + DYNAMICS[1][1] * r[1]),
        ];
        let next = [clip(a[0] - step * g[0]), clip(a[1] - step * g[1])];
        let moved = (next[0] - a[0]).hypot(next[1] - a[1]);
        a = next;
        if moved < 1e-12 {
            break;
        }
    }
    a
}
