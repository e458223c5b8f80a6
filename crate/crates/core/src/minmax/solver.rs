use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::message::{LocalityAudit, MessageBus};
use super::weights::metropolis_weights;
use crate::error::{Error, Result};
use crate::maxaffine::LiftedModel;
use crate::rng::{derive_seed, SimRng, Stream};
use crate::space::ActionBox;
use crate::topology::TopologySchedule;

/// Agent estimate of the optimal point `alpha` and optimal value `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentIterate {
    pub alpha: Vec<f64>,
    pub eta: f64,
}

/// Step sizes `beta_k = beta0 / (k + 1)^power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRule {
    pub beta0: f64,
    pub power: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self {
            beta0: 1.0,
            power: 1.0,
        }
    }
}

impl StepRule {
    pub fn beta(&self, k: usize) -> f64 {
        self.beta0 / ((k + 1) as f64).powf(self.power)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Noise {
    #[default]
    Zero,
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub n_iters: usize,
    pub step: StepRule,
    /// Penalty weight `r > 1`, shared by all agents.
    pub r: f64,
    pub noise: Noise,
    pub noise_seed: u64,
    /// Collect a per-round, per-agent trace.
    pub record_trace: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            n_iters: 1000,
            step: StepRule::default(),
            r: 2.0,
            noise: Noise::Zero,
            noise_seed: 0,
            record_trace: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 1.0) {
            return Err(Error::Config(format!("optimizer.r must exceed 1, got {}", self.r)));
        }
        let p = self.step.power;
        if !(self.step.beta0 > 0.0) || !(p > 0.5 && p <= 1.0) {
            return Err(Error::Config(
                "optimizer step needs beta0 > 0 and power in (0.5, 1] so that sum beta = inf and sum beta^2 < inf"
                    .into(),
            ));
        }
        if let Noise::Gaussian { sigma } = self.noise {
            if !(sigma >= 0.0) {
                return Err(Error::Config("optimizer noise sigma must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

/// A convex function known only to its agent.
pub trait LocalObjective: Send + Sync {
    fn value(&self, alpha: &[f64]) -> Result<f64>;
    fn subgradient(&self, alpha: &[f64]) -> Result<Vec<f64>>;
}

impl LocalObjective for LiftedModel {
    fn value(&self, alpha: &[f64]) -> Result<f64> {
        self.eval(alpha)
    }

    fn subgradient(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        LiftedModel::subgradient(self, alpha)
    }
}

/// Objective from a value closure and a subgradient closure.
pub struct FnObjective<F, G> {
    pub value: F,
    pub subgradient: G,
}

impl<F, G> LocalObjective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn value(&self, alpha: &[f64]) -> Result<f64> {
        Ok((self.value)(alpha))
    }

    fn subgradient(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        Ok((self.subgradient)(alpha))
    }
}

/// Convex combination `sum_j w_j z_j` of neighbor iterates.
pub fn mix(iterates: &[&AgentIterate], weights: &[f64]) -> Result<AgentIterate> {
    if iterates.is_empty() || iterates.len() != weights.len() {
        return Err(Error::Config(format!(
            "{} iterates but {} weights",
            iterates.len(),
            weights.len()
        )));
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "mixing weights must be nonnegative and sum to 1 (sum = {sum})"
        )));
    }
    let dim = iterates[0].alpha.len();
    if iterates.iter().any(|z| z.alpha.len() != dim) {
        return Err(Error::arg("iterates disagree on the joint dimension"));
    }
    let mut alpha = vec![0.0; dim];
    let mut eta = 0.0;
    for (z, &w) in iterates.iter().zip(weights) {
        for (a, v) in alpha.iter_mut().zip(&z.alpha) {
            *a += w * v;
        }
        eta += w * z.eta;
    }
    Ok(AgentIterate { alpha, eta })
}

/// One projected stochastic subgradient step from the mixed iterate.
///
/// `noise` is added to the `alpha` part of the subgradient when given.
#[allow(clippy::too_many_arguments)]
pub fn step(
    mixed: &AgentIterate,
    k: usize,
    objective: &dyn LocalObjective,
    cfg: &OptimizerConfig,
    n_agents: usize,
    feasible: &ActionBox,
    noise: Option<&[f64]>,
) -> Result<AgentIterate> {
    let beta = cfg.step.beta(k);
    let mut alpha = mixed.alpha.clone();
    let eta_v = mixed.eta - beta / n_agents as f64;
    let active = objective.value(&alpha)? - eta_v > 0.0;
    let mut eta = eta_v;
    if active {
        let g = objective.subgradient(&alpha)?;
        if g.len() != alpha.len() {
            return Err(Error::arg("subgradient has the wrong dimension"));
        }
        for (a, gi) in alpha.iter_mut().zip(&g) {
            *a -= beta * cfg.r * gi;
        }
        eta += beta * cfg.r;
    }
    if let Some(eps) = noise {
        for (a, e) in alpha.iter_mut().zip(eps) {
            *a -= beta * cfg.r * e;
        }
    }
    feasible.project_in_place(&mut alpha);
    Ok(AgentIterate { alpha, eta })
}

/// `alpha_0 = center of the box`, `eta_0 = f_i(alpha_0)`.
pub fn init_iterates(objectives: &[&dyn LocalObjective], feasible: &ActionBox) -> Result<Vec<AgentIterate>> {
    let alpha = feasible.center();
    objectives
        .iter()
        .map(|f| {
            Ok(AgentIterate {
                eta: f.value(&alpha)?,
                alpha: alpha.clone(),
            })
        })
        .collect()
}

/// `max_i || z_i - mean(z) ||` over the stacked `(alpha, eta)` vectors.
pub fn disagreement(iterates: &[AgentIterate]) -> f64 {
    let n = iterates.len() as f64;
    let dim = iterates[0].alpha.len();
    let mut mean_alpha = vec![0.0; dim];
    let mut mean_eta = 0.0;
    for z in iterates {
        for (m, a) in mean_alpha.iter_mut().zip(&z.alpha) {
            *m += a / n;
        }
        mean_eta += z.eta / n;
    }
    iterates
        .iter()
        .map(|z| {
            let d: f64 = z
                .alpha
                .iter()
                .zip(&mean_alpha)
                .map(|(a, m)| (a - m).powi(2))
                .sum::<f64>()
                + (z.eta - mean_eta).powi(2);
            d.sqrt()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub round: usize,
    pub agent: usize,
    pub eta: f64,
    pub disagreement: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct MinMaxRun {
    pub iterates: Vec<AgentIterate>,
    /// Disagreement after each round.
    pub disagreement: Vec<f64>,
    pub trace: Vec<TraceRow>,
    /// False when some round ran on a disconnected graph.
    pub connected: bool,
}

/// Runs `cfg.n_iters` synchronous rounds. In round `k` the network is
/// `network.at(k)`; each agent reads the previous round's iterates of its
/// neighbors through the message layer, mixes with Metropolis weights and steps.
pub fn run(
    network: &TopologySchedule,
    objectives: &[&dyn LocalObjective],
    cfg: &OptimizerConfig,
    init: Vec<AgentIterate>,
    feasible: &ActionBox,
    audit: &LocalityAudit,
) -> Result<MinMaxRun> {
    cfg.validate()?;
    let n = network.n_agents();
    if objectives.len() != n || init.len() != n {
        return Err(Error::arg(format!(
            "{n} agents but {} objectives and {} initial iterates",
            objectives.len(),
            init.len()
        )));
    }
    if init.iter().any(|z| z.alpha.len() != feasible.dim()) {
        return Err(Error::arg("initial iterates do not match the feasible box"));
    }
    let noise_dist = match cfg.noise {
        Noise::Gaussian { sigma } if sigma > 0.0 => {
            Some(Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?)
        }
        _ => None,
    };
    let mut rngs: Vec<SimRng> = (0..n)
        .map(|i| SimRng::seed_from_u64(derive_seed(cfg.noise_seed, Stream::Noise, &[i as u64])))
        .collect();

    let mut connected = true;
    let mut iterates = init;
    let mut trace_d = Vec::with_capacity(cfg.n_iters);
    let mut trace = Vec::new();
    for k in 0..cfg.n_iters {
        let topology = network.at(k);
        connected &= topology.is_connected();
        let bus = MessageBus::publish(topology, k, "minmax", iterates, audit)?;
        let mut next = Vec::with_capacity(n);
        for (i, rng) in rngs.iter_mut().enumerate() {
            let ctx = |e: Error| Error::Optimizer {
                agent: i,
                round: k,
                source: Box::new(e),
            };
            let received = bus.gather(i).map_err(ctx)?;
            let row = metropolis_weights(topology, i).map_err(ctx)?;
            let (zs, ws): (Vec<&AgentIterate>, Vec<f64>) = received
                .iter()
                .zip(&row)
                .map(|((_, z), &(_, w))| (*z, w))
                .unzip();
            let mixed = mix(&zs, &ws).map_err(ctx)?;
            let eps: Option<Vec<f64>> = noise_dist
                .as_ref()
                .map(|d| (0..mixed.alpha.len()).map(|_| d.sample(rng)).collect());
            let z = step(&mixed, k, objectives[i], cfg, n, feasible, eps.as_deref()).map_err(ctx)?;
            if !feasible.contains(&z.alpha) || !z.eta.is_finite() {
                return Err(ctx(Error::arg("iterate left the feasible set")));
            }
            next.push(z);
        }
        drop(bus);
        iterates = next;
        let d = disagreement(&iterates);
        trace_d.push(d);
        if cfg.record_trace {
            for (i, z) in iterates.iter().enumerate() {
                trace.push(TraceRow {
                    round: k,
                    agent: i,
                    eta: z.eta,
                    disagreement: d,
                    objective: objectives[i].value(&z.alpha)?,
                });
            }
        }
    }
    Ok(MinMaxRun {
        iterates,
        disagreement: trace_d,
        trace,
        connected,
    })
}

/// Writes `round,agent,eta,disagreement,objective_value_at_own_alpha`; agents are 1-based.
pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = String::from("round,agent,eta,disagreement,objective_value_at_own_alpha\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:?},{:?},{:?}\n",
            r.round,
            crate::topology::to_label(r.agent),
            r.eta,
            r.disagreement,
            r.objective
        ));
    }
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Topology;

    fn z(alpha: &[f64], eta: f64) -> AgentIterate {
        AgentIterate {
            alpha: alpha.to_vec(),
            eta,
        }
    }

    #[test]
    fn mix_single_is_identity() {
        let a = z(&[0.3, -2.0], 1.5);
        assert_eq!(mix(&[&a], &[1.0]).unwrap(), a);
    }

    #[test]
    fn mix_equal_iterates() {
        let a = z(&[0.3, -2.0], 1.5);
        let m = mix(&[&a, &a, &a], &[0.2, 0.3, 0.5]).unwrap();
        for (x, y) in m.alpha.iter().zip(&a.alpha) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((m.eta - 1.5).abs() < 1e-15);
    }

    #[test]
    fn mix_midpoint() {
        let m = mix(&[&z(&[0.0], 0.0), &z(&[2.0], 0.0)], &[0.5, 0.5]).unwrap();
        assert_eq!(m.alpha, vec![1.0]);
    }

    #[test]
    fn mix_rejects_bad_rows() {
        let a = z(&[0.0], 0.0);
        assert!(matches!(mix(&[&a, &a], &[0.7, 0.7]), Err(Error::Config(_))));
        assert!(matches!(mix(&[&a, &a], &[1.5, -0.5]), Err(Error::Config(_))));
        assert!(mix(&[&a], &[0.5, 0.5]).is_err());
    }

    fn abs_objective() -> impl LocalObjective {
        FnObjective {
            value: |a: &[f64]| a[0].abs(),
            subgradient: |a: &[f64]| vec![if a[0] >= 0.0 { 1.0 } else { -1.0 }],
        }
    }

    #[test]
    fn inactive_penalty_only_shifts_eta() {
        let cfg = OptimizerConfig::default();
        let feasible = ActionBox::uniform(1, -1.0, 1.0).unwrap();
        let mixed = z(&[0.5], 3.0);
        let next = step(&mixed, 0, &abs_objective(), &cfg, 1, &feasible, None).unwrap();
        assert_eq!(next.alpha, vec![0.5]);
        assert_eq!(next.eta, 3.0 - 1.0);
    }

    #[test]
    fn active_penalty_steps_and_projects() {
        let cfg = OptimizerConfig::default();
        let feasible = ActionBox::uniform(1, -1.0, 1.0).unwrap();
        // v = (0.5, -1); f(0.5) - (-1) > 0 so g = (1, -1); step beta r = 2
        let next = step(&z(&[0.5], 0.0), 0, &abs_objective(), &cfg, 1, &feasible, None).unwrap();
        assert_eq!(next.alpha, vec![-1.0]);
        assert_eq!(next.eta, 1.0);
    }

    #[test]
    fn single_agent_abs_converges_to_origin() {
        let cfg = OptimizerConfig {
            n_iters: 5000,
            ..OptimizerConfig::default()
        };
        let feasible = ActionBox::uniform(1, -1.0, 1.0).unwrap();
        let f = abs_objective();
        let objs: Vec<&dyn LocalObjective> = vec![&f];
        let init = init_iterates(&objs, &feasible).unwrap();
        let audit = LocalityAudit::new();
        let sched = TopologySchedule::fixed(Topology::new(1, []).unwrap());
        let out = run(&sched, &objs, &cfg, init, &feasible, &audit).unwrap();
        let last = &out.iterates[0];
        assert!(last.alpha[0].abs() < 1e-2, "{last:?}");
        assert!(last.eta.abs() < 1e-2, "{last:?}");
    }

    #[test]
    fn zero_rounds_return_init() {
        let cfg = OptimizerConfig {
            n_iters: 0,
            ..OptimizerConfig::default()
        };
        let feasible = ActionBox::uniform(1, -1.0, 1.0).unwrap();
        let f = abs_objective();
        let objs: Vec<&dyn LocalObjective> = vec![&f, &f];
        let init = vec![z(&[0.25], 4.0), z(&[-0.5], 1.0)];
        let sched = TopologySchedule::fixed(Topology::path(2).unwrap());
        let out = run(&sched, &objs, &cfg, init.clone(), &feasible, &LocalityAudit::new()).unwrap();
        assert_eq!(out.iterates, init);
        assert!(out.disagreement.is_empty());
    }

    #[test]
    fn config_validation() {
        let bad_r = OptimizerConfig {
            r: 1.0,
            ..OptimizerConfig::default()
        };
        assert!(bad_r.validate().is_err());
        let bad_step = OptimizerConfig {
            step: StepRule {
                beta0: 1.0,
                power: 0.5,
            },
            ..OptimizerConfig::default()
        };
        assert!(bad_step.validate().is_err());
    }

    #[test]
    fn gaussian_noise_is_seeded() {
        let cfg = OptimizerConfig {
            n_iters: 200,
            noise: Noise::Gaussian { sigma: 0.1 },
            noise_seed: 9,
            ..OptimizerConfig::default()
        };
        let feasible = ActionBox::uniform(1, -1.0, 1.0).unwrap();
        let f = abs_objective();
        let objs: Vec<&dyn LocalObjective> = vec![&f, &f];
        let sched = TopologySchedule::fixed(Topology::path(2).unwrap());
        let go = || {
            let init = init_iterates(&objs, &feasible).unwrap();
            run(&sched, &objs, &cfg, init, &feasible, &LocalityAudit::new()).unwrap().iterates
        };
        assert_eq!(go(), go());
    }
}
