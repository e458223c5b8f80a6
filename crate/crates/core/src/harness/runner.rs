//! Closed-loop runs of the proposed method, the two baselines and the
//! open-loop optimum on a formation experiment.

use std::time::Instant;

use rayon::prelude::*;

use super::config::{Algorithm, Experiment};
use super::record::{RunMeta, RunRecord, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::formation::{
    local_generative_model, rollout_action, FormationRollout, LocalFormationModel, RolloutConfig,
};
use crate::maxaffine::{fit, FitConfig, LiftedModel, MaxAffineModel};
use crate::minmax::{self, init_iterates, LocalObjective, LocalityAudit, MessageBus};
use crate::oracles::optimal_openloop;
use crate::planner::{Planner, QSample};
use crate::rng::{derive_seed, rng_for, Stream};
use crate::space::{ActionBox, JointAction, JointState, JointVec};
use crate::topology::{Topology, TopologySchedule};

/// Empty record for a run of `algo` with `seed`.
pub fn new_record(exp: &Experiment, algo: Algorithm, seed: u64) -> RunRecord {
    RunRecord::new(RunMeta {
        schema_version: SCHEMA_VERSION,
        name: exp.config.experiment.name.clone(),
        algorithm: algo,
        seed,
        n_agents: exp.env.n_agents(),
        horizon: exp.config.experiment.horizon,
        discount: exp.config.experiment.discount,
        bus_reads: 0,
        locality_violations: 0,
        openloop_value: None,
    })
}

/// Runs `algo` to completion.
pub fn run(exp: &Experiment, algo: Algorithm, seed: u64) -> Result<RunRecord> {
    let mut record = new_record(exp, algo, seed);
    execute(exp, &mut record)?;
    Ok(record)
}

/// Fills `record` timestep by timestep; on failure the completed timesteps
/// stay in `record` and the error carries the failing timestep.
pub fn execute(exp: &Experiment, record: &mut RunRecord) -> Result<()> {
    let audit = LocalityAudit::new();
    let result = match record.meta.algorithm {
        Algorithm::Optimal => run_optimal(exp, record),
        algo => {
            let horizon = exp.config.experiment.horizon;
            let mut state = exp.initial.clone();
            let mut out = Ok(());
            for t in record.steps.len()..horizon {
                let started = Instant::now();
                let step = (|| {
                    let topo = exp.schedule.at(t);
                    let action = match algo {
                        Algorithm::Proposed => proposed_action(exp, record, &state, t, &audit)?,
                        Algorithm::PomcpowBaseline => pomcpow_action(exp, &state, t, record.meta.seed, &audit)?,
                        Algorithm::RolloutBaseline => rollout_baseline_action(exp, &state, t, &audit)?,
                        Algorithm::Optimal => unreachable!(),
                    };
                    let next = exp.env.step(&state, &action)?;
                    let rewards = exp.env.rewards(&next, topo)?;
                    Ok((next, action, rewards))
                })();
                match step {
                    Ok((next, action, rewards)) => {
                        record.push(rewards, action.as_slice().to_vec(), started.elapsed().as_secs_f64());
                        state = next;
                    }
                    Err(e) => {
                        out = Err(Error::Run {
                            timestep: t,
                            source: Box::new(e),
                        });
                        break;
                    }
                }
            }
            out
        }
    };
    record.meta.bus_reads = audit.reads();
    record.meta.locality_violations = audit.violations().len();
    result
}

/// Each agent reads the positions of its closed neighborhood through the bus.
fn observe(state: &JointState, topo: &Topology, round: usize, audit: &LocalityAudit) -> Result<Vec<Vec<f64>>> {
    let positions: Vec<[f64; 2]> = (0..state.n_agents())
        .map(|i| [state.agent(i)[0], state.agent(i)[1]])
        .collect();
    let bus = MessageBus::publish(topo, round, "state", positions, audit)?;
    (0..state.n_agents())
        .map(|i| Ok(bus.gather(i)?.into_iter().flat_map(|(_, p)| *p).collect()))
        .collect()
}

fn local_model(exp: &Experiment, topo: &Topology, i: usize, t: usize) -> Result<LocalFormationModel> {
    let c = &exp.config;
    Ok(local_generative_model(topo, &exp.env.spec, i, exp.env.pair_mode)?
        .with_horizon(c.experiment.horizon - t)
        .with_discount(c.experiment.discount))
}

fn plan_local(
    exp: &Experiment,
    model: &LocalFormationModel,
    local_state: &[f64],
    seed: u64,
    t: usize,
    i: usize,
) -> Result<Vec<QSample>> {
    let rollout = FormationRollout::new(model, exp.config.rollout.clone())?;
    let mut rng = rng_for(seed, Stream::Plan, &[t as u64, i as u64]);
    let out = Planner::new(model, &rollout, &exp.config.planner).run(local_state, &mut rng)?;
    Ok(out.samples)
}

/// Max-affine fit sized to the sample count: at most one hyperplane per
/// `dim + 1` samples, so every cell can be determined, and a single
/// ridge-damped plane when there are fewer than `dim + 1` samples.
pub fn fit_samples(xs: &[Vec<f64>], ys: &[f64], cfg: &FitConfig) -> Result<MaxAffineModel> {
    let n = xs.len();
    let dim = xs.first().map_or(0, Vec::len);
    if n == 0 || dim == 0 {
        return Err(Error::Fit("no samples to fit".into()));
    }
    if n < dim + 1 {
        let idx: Vec<usize> = (0..n).collect();
        let cell = crate::maxaffine::fit_cell(xs, ys, &idx);
        return Ok(MaxAffineModel::affine(cell.weight, cell.offset));
    }
    let cfg = FitConfig {
        n_hyperplanes: cfg.n_hyperplanes.min(n / (dim + 1)).max(1),
        ..cfg.clone()
    };
    fit(xs, ys, &cfg)
}

fn members_coords(members: &[usize]) -> Vec<usize> {
    members.iter().flat_map(|&j| [2 * j, 2 * j + 1]).collect()
}

fn proposed_action(
    exp: &Experiment,
    record: &RunRecord,
    state: &JointState,
    t: usize,
    audit: &LocalityAudit,
) -> Result<JointAction> {
    let c = &exp.config;
    let seed = record.meta.seed;
    let n = exp.env.n_agents();
    let topo = exp.schedule.at(t);
    let local = observe(state, topo, t, audit)?;
    let before = record.cumulative_before(t);
    let scale = c.experiment.discount.powi(t as i32);

    let surrogates = (0..n)
        .into_par_iter()
        .map(|i| {
            let model = local_model(exp, topo, i, t)?;
            let samples = plan_local(exp, &model, &local[i], seed, t, i)?;
            let xs: Vec<Vec<f64>> = samples.iter().map(|s| s.action.clone()).collect();
            let ys: Vec<f64> = samples.iter().map(|s| -s.value).collect();
            let fit_cfg = FitConfig {
                rng_seed: derive_seed(seed, Stream::Fit, &[t as u64, i as u64]),
                ..c.fit.clone()
            };
            let m = fit_samples(&xs, &ys, &fit_cfg)?.scale(scale)?.offset(-before[i]);
            LiftedModel::new(m, members_coords(model.members()), 2 * n)
        })
        .collect::<Result<Vec<_>>>()?;

    let objectives: Vec<&dyn LocalObjective> = surrogates.iter().map(|s| s as &dyn LocalObjective).collect();
    let feasible = ActionBox::unit(2 * n);
    let opt_cfg = minmax::OptimizerConfig {
        noise_seed: derive_seed(seed, Stream::Noise, &[t as u64]),
        ..c.optimizer.clone()
    };
    let init = init_iterates(&objectives, &feasible)?;
    let network = TopologySchedule::fixed(topo.clone());
    let out = minmax::run(&network, &objectives, &opt_cfg, init, &feasible, audit)?;
    let mut action = JointVec::zeros(n, 2);
    for (i, z) in out.iterates.iter().enumerate() {
        let own = action.agent_mut(i);
        own.copy_from_slice(&z.alpha[2 * i..2 * i + 2]);
        own.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    }
    Ok(action)
}

fn pomcpow_action(exp: &Experiment, state: &JointState, t: usize, seed: u64, audit: &LocalityAudit) -> Result<JointAction> {
    let n = exp.env.n_agents();
    let topo = exp.schedule.at(t);
    let local = observe(state, topo, t, audit)?;
    let chosen = (0..n)
        .into_par_iter()
        .map(|i| {
            let model = local_model(exp, topo, i, t)?;
            let samples = plan_local(exp, &model, &local[i], seed, t, i)?;
            let best = samples
                .iter()
                .fold(None::<&QSample>, |b, s| match b {
                    Some(b) if b.value >= s.value => Some(b),
                    _ => Some(s),
                })
                .ok_or_else(|| Error::Model("planner returned no samples".into()))?;
            let pos = model
                .members()
                .iter()
                .position(|&j| j == i)
                .expect("an agent belongs to its neighborhood");
            Ok([best.action[2 * pos], best.action[2 * pos + 1]])
        })
        .collect::<Result<Vec<_>>>()?;
    JointVec::from_agents(&chosen.iter().map(|a| a.to_vec()).collect::<Vec<_>>())
}

/// Euler integration of the formation flow where every agent computes its
/// velocity from neighbor positions received over the bus. Stops when every
/// speed is below the tolerance or the time budget runs out.
pub fn converge_over_bus(
    positions: &[f64],
    desired: &[f64],
    topo: &Topology,
    cfg: &RolloutConfig,
    round: usize,
    audit: &LocalityAudit,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    cfg.check_stable(topo.max_degree())?;
    let n = topo.n_agents();
    let max_steps = (cfg.total_time / cfg.euler_dt).ceil() as usize;
    let mut s = positions.to_vec();
    for _ in 0..max_steps {
        let msgs: Vec<[f64; 2]> = (0..n).map(|i| [s[2 * i], s[2 * i + 1]]).collect();
        let bus = MessageBus::publish(topo, round, "flow", msgs, audit)?;
        let mut fastest: f64 = 0.0;
        let mut vel = vec![0.0; 2 * n];
        for i in 0..n {
            let (mut vx, mut vy) = (0.0, 0.0);
            let own = *bus.read(i, i)?;
            for &j in topo.adjacent(i) {
                let other = bus.read(i, j)?;
                vx -= (own[0] - other[0]) - (desired[2 * i] - desired[2 * j]);
                vy -= (own[1] - other[1]) - (desired[2 * i + 1] - desired[2 * j + 1]);
            }
            vel[2 * i] = vx;
            vel[2 * i + 1] = vy;
            fastest = fastest.max(vx.hypot(vy));
        }
        if fastest < cfg.convergence_tol {
            break;
        }
        for (x, v) in s.iter_mut().zip(&vel) {
            *x += cfg.euler_dt * v;
        }
    }
    Ok(s)
}

fn rollout_baseline_action(exp: &Experiment, state: &JointState, t: usize, audit: &LocalityAudit) -> Result<JointAction> {
    let topo = exp.schedule.at(t);
    let desired: Vec<f64> = exp.env.spec.desired.iter().flatten().copied().collect();
    let cfg = &exp.config.rollout;
    let target = converge_over_bus(state.as_slice(), &desired, topo, cfg, t, audit)?;
    let per_agent: Vec<Vec<f64>> = (0..state.n_agents())
        .map(|i| {
            let s = state.agent(i);
            rollout_action([s[0], s[1]], [target[2 * i], target[2 * i + 1]], cfg.lookahead_iters).to_vec()
        })
        .collect();
    JointVec::from_agents(&per_agent)
}

fn run_optimal(exp: &Experiment, record: &mut RunRecord) -> Result<()> {
    let horizon = exp.config.experiment.horizon;
    let started = Instant::now();
    let plan = optimal_openloop(&exp.env, &exp.schedule, &exp.initial, horizon, &exp.config.openloop)
        .map_err(|e| Error::Run {
            timestep: 0,
            source: Box::new(e),
        })?;
    let per_step = started.elapsed().as_secs_f64() / horizon.max(1) as f64;
    record.meta.openloop_value = Some(plan.value);
    for (a, r) in plan.actions.iter().zip(plan.rewards) {
        record.push(r, a.as_slice().to_vec(), per_step);
    }
    Ok(())
}
