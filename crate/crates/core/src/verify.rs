//! Oracle and property checks runnable outside the test harness, backing the
//! `verify` subcommand. Each check reports what it measured.

use std::time::Instant;

use crate::formation::{rollout_converge, RolloutConfig};
use crate::maxaffine::{fit_with_report, FitConfig};
use crate::minmax::{self, FnObjective, LocalObjective, LocalityAudit, OptimizerConfig};
use crate::oracles::{chain_mdp, dp_counterexample, value_iteration, TabularModel};
use crate::planner::{plan, PlannerConfig, RandomRollout};
use crate::space::ActionBox;
use crate::topology::{Topology, TopologySchedule};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn timed(name: &'static str, f: impl FnOnce() -> (bool, String)) -> Check {
    let start = Instant::now();
    let (passed, detail) = f();
    Check {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn counterexample() -> Check {
    timed("max-min objective lacks optimal substructure", || {
        let (_, v) = dp_counterexample();
        (
            v.greedy_value == 95.0 && v.optimal_value == 205.0 && v.dp_fails(),
            format!("greedy {} vs optimal {}", v.greedy_value, v.optimal_value),
        )
    })
}

pub fn quadratic_minmax() -> Check {
    timed("distributed min-max on a 3-agent path", || {
        let objs: Vec<_> = [0.0, 1.0, 2.0]
            .into_iter()
            .map(|c: f64| FnObjective {
                value: move |a: &[f64]| (a[0] - c).powi(2),
                subgradient: move |a: &[f64]| vec![2.0 * (a[0] - c)],
            })
            .collect();
        let refs: Vec<&dyn LocalObjective> = objs.iter().map(|o| o as &dyn LocalObjective).collect();
        let feasible = ActionBox::uniform(1, -10.0, 10.0).expect("valid box");
        let cfg = OptimizerConfig {
            n_iters: 20_000,
            ..OptimizerConfig::default()
        };
        let audit = LocalityAudit::new();
        let net = TopologySchedule::fixed(Topology::path(3).expect("3 agents"));
        let run = minmax::init_iterates(&refs, &feasible)
            .and_then(|init| minmax::run(&net, &refs, &cfg, init, &feasible, &audit));
        match run {
            Ok(out) => {
                let err = out
                    .iterates
                    .iter()
                    .map(|z| (z.alpha[0] - 1.0).abs().max((z.eta - 1.0).abs()))
                    .fold(0.0, f64::max);
                let dis = *out.disagreement.last().unwrap_or(&f64::NAN);
                (
                    err <= 5e-2 && dis < 1e-2 && audit.is_clean(),
                    format!("max distance to (1, 1) {err:.3e}, disagreement {dis:.3e}"),
                )
            }
            Err(e) => (false, e.to_string()),
        }
    })
}

pub fn metropolis() -> Check {
    timed("Metropolis weights are doubly stochastic", || {
        let mut worst: f64 = 0.0;
        for g in [Topology::g1(), Topology::g2(), Topology::g3()] {
            let w = minmax::metropolis(&g).dense();
            let n = w.len();
            for i in 0..n {
                worst = worst.max((w[i].iter().sum::<f64>() - 1.0).abs());
                worst = worst.max(((0..n).map(|r| w[r][i]).sum::<f64>() - 1.0).abs());
            }
        }
        (worst <= 1e-12, format!("largest row/column sum deviation {worst:.1e}"))
    })
}

pub fn max_affine() -> Check {
    timed("max-affine fits of |x| and x^2", || {
        let xs: Vec<Vec<f64>> = (0..201).map(|k| vec![-1.0 + k as f64 / 100.0]).collect();
        let abs: Vec<f64> = xs.iter().map(|x| x[0].abs()).collect();
        let sq: Vec<f64> = xs.iter().map(|x| x[0] * x[0]).collect();
        let two = FitConfig {
            n_hyperplanes: 2,
            ..FitConfig::default()
        };
        let r1 = fit_with_report(&xs, &abs, &two).map(|r| r.rmse);
        let r2 = fit_with_report(&xs, &sq, &FitConfig::default()).map(|r| r.rmse);
        match (r1, r2) {
            (Ok(a), Ok(b)) => (a < 1e-8 && b <= 7.8e-3, format!("|x| rmse {a:.1e}, x^2 rmse {b:.2e}")),
            (Err(e), _) | (_, Err(e)) => (false, e.to_string()),
        }
    })
}

pub fn planner_chain() -> Check {
    timed("planner matches value iteration on the chain", || {
        let game = chain_mdp();
        let q = match value_iteration(&game) {
            Ok(q) => q,
            Err(e) => return (false, e.to_string()),
        };
        let model = match TabularModel::new(game) {
            Ok(m) => m,
            Err(e) => return (false, e.to_string()),
        };
        let mut errors = Vec::new();
        for n_queries in [100, 500, 2000] {
            let cfg = PlannerConfig {
                n_queries,
                ..PlannerConfig::default()
            };
            match plan(&[0.0], &model, &RandomRollout, &cfg) {
                Ok(samples) => {
                    let best = samples.iter().max_by(|a, b| a.value.total_cmp(&b.value)).expect("samples");
                    let star = q.q[0][0][best.action[0] as usize];
                    errors.push((best.value - star).abs() / star.abs());
                }
                Err(e) => return (false, e.to_string()),
            }
        }
        (
            errors[2] <= 0.05 && errors[0] > errors[1] && errors[1] > errors[2],
            format!("relative errors {:.3} {:.3} {:.4}", errors[0], errors[1], errors[2]),
        )
    })
}

pub fn rollout_flow() -> Check {
    timed("formation flow reaches the two-agent equilibrium", || {
        let cfg = RolloutConfig::default();
        let out = rollout_converge(
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &Topology::complete(2).expect("2 agents"),
            &cfg,
        );
        match out {
            Ok(o) => {
                let want = [-0.5, 0.0, 0.5, 0.0];
                let err = o.state.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let drift = ((o.state[0] + o.state[2]) / 2.0).hypot((o.state[1] + o.state[3]) / 2.0);
                (
                    o.converged && err <= 1e-4 && drift < 1e-9,
                    format!("max error {err:.1e}, centroid drift {drift:.1e}"),
                )
            }
            Err(e) => (false, e.to_string()),
        }
    })
}

/// Every check, in a fixed order.
pub fn run_all() -> Vec<Check> {
    vec![
        counterexample(),
        quadratic_minmax(),
        metropolis(),
        max_affine(),
        planner_chain(),
        rollout_flow(),
    ]
}
