//! End-to-end acceptance suite. Each test prints one `PASS`/`FAIL` line and
//! then asserts, so
//! `cargo test -p maxmin-core --test system_acceptance -- --nocapture`
//! doubles as a report.

#![allow(clippy::needless_range_loop)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use maxmin_core::formation::rollout_converge;
use maxmin_core::harness::{self, Algorithm, ExperimentConfig, RunRecord};
use maxmin_core::maxaffine::{fit_with_report, FitConfig, MaxAffineModel};
use maxmin_core::minmax::{self, metropolis, FnObjective, LocalObjective, LocalityAudit, OptimizerConfig};
use maxmin_core::oracles::{chain_mdp, dp_counterexample, value_iteration, TabularModel};
use maxmin_core::planner::{plan, PlannerConfig, RandomRollout};
use maxmin_core::rng::SimRng;
use maxmin_core::{ActionBox, RolloutConfig, Topology, TopologySchedule};
use rand::{Rng, SeedableRng};

fn verdict(n: usize, name: &str, passed: bool, detail: String) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("criterion {n} {tag} {name}: {detail}");
    assert!(passed, "criterion {n} ({name}) failed: {detail}");
}

#[test]
fn criterion_1_dp_counterexample() {
    let start = Instant::now();
    let (_, v) = dp_counterexample();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "max-min counterexample",
        v.greedy_value == 95.0 && v.optimal_value == 205.0 && v.dp_fails() && secs < 1.0,
        format!("greedy {} vs optimal {} in {secs:.3}s", v.greedy_value, v.optimal_value),
    );
}

#[test]
fn criterion_2_quadratic_minmax() {
    let start = Instant::now();
    let objs: Vec<_> = [0.0, 1.0, 2.0]
        .into_iter()
        .map(|c: f64| FnObjective {
            value: move |a: &[f64]| (a[0] - c).powi(2),
            subgradient: move |a: &[f64]| vec![2.0 * (a[0] - c)],
        })
        .collect();
    let refs: Vec<&dyn LocalObjective> = objs.iter().map(|o| o as &dyn LocalObjective).collect();
    let feasible = ActionBox::uniform(1, -10.0, 10.0).unwrap();
    let cfg = OptimizerConfig {
        n_iters: 20_000,
        ..OptimizerConfig::default()
    };
    let net = TopologySchedule::fixed(Topology::path(3).unwrap());
    let init = minmax::init_iterates(&refs, &feasible).unwrap();
    let out = minmax::run(&net, &refs, &cfg, init, &feasible, &LocalityAudit::new()).unwrap();
    let err = out
        .iterates
        .iter()
        .map(|z| (z.alpha[0] - 1.0).abs().max((z.eta - 1.0).abs()))
        .fold(0.0, f64::max);
    let dis = *out.disagreement.last().unwrap();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        2,
        "distributed min-max on the 3-agent path",
        err <= 5e-2 && dis < 1e-2 && secs < 10.0,
        format!("max distance to (1, 1) {err:.3e}, disagreement {dis:.3e}, {secs:.2}s"),
    );
}

#[test]
fn criterion_3_metropolis_weights() {
    let mut worst: f64 = 0.0;
    for g in [Topology::g1(), Topology::g2(), Topology::g3()] {
        let w = metropolis(&g).dense();
        let n = w.len();
        for i in 0..n {
            worst = worst.max((w[i].iter().sum::<f64>() - 1.0).abs());
            worst = worst.max(((0..n).map(|r| w[r][i]).sum::<f64>() - 1.0).abs());
        }
    }
    verdict(
        3,
        "Metropolis weights doubly stochastic",
        worst <= 1e-12,
        format!("largest row/column sum deviation {worst:.1e}"),
    );
}

/// Counts probes violating convexity and the subgradient inequality.
fn property_violations(model: &MaxAffineModel, probes: usize, seed: u64) -> (usize, usize) {
    let mut rng = SimRng::seed_from_u64(seed);
    let dim = model.dim();
    let point = |rng: &mut SimRng| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<f64>>();
    let (mut convex, mut subgrad) = (0, 0);
    for _ in 0..probes {
        let (x, y) = (point(&mut rng), point(&mut rng));
        let lam: f64 = rng.random();
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
        let (fx, fy) = (model.eval(&x).unwrap(), model.eval(&y).unwrap());
        let rhs = lam * fx + (1.0 - lam) * fy;
        if model.eval(&mid).unwrap() > rhs + 1e-9 * (1.0 + rhs.abs()) {
            convex += 1;
        }
        let g = model.subgradient(&x).unwrap();
        let lin = fx + g.iter().zip(y.iter().zip(&x)).map(|(gi, (yi, xi))| gi * (yi - xi)).sum::<f64>();
        if fy < lin - 1e-9 * (1.0 + lin.abs()) {
            subgrad += 1;
        }
    }
    (convex, subgrad)
}

#[test]
fn criterion_4_max_affine_regression() {
    let start = Instant::now();
    let xs: Vec<Vec<f64>> = (0..201).map(|k| vec![-1.0 + k as f64 / 100.0]).collect();
    let abs: Vec<f64> = xs.iter().map(|x| x[0].abs()).collect();
    let sq: Vec<f64> = xs.iter().map(|x| x[0] * x[0]).collect();
    let two = FitConfig {
        n_hyperplanes: 2,
        ..FitConfig::default()
    };
    let r_abs = fit_with_report(&xs, &abs, &two).unwrap().rmse;
    let r_sq = fit_with_report(&xs, &sq, &FitConfig::default()).unwrap().rmse;

    let xs3: Vec<Vec<f64>> = (0..300)
        .map(|k| {
            let t = k as f64 * 0.37;
            vec![2.0 * t.sin(), 2.0 * (0.53 * t).cos(), (1.3 * t).sin()]
        })
        .collect();
    let ys3: Vec<f64> = xs3.iter().map(|x| x[0] * x[0] + (x[1] - x[2]).abs()).collect();
    let model = fit_with_report(&xs3, &ys3, &FitConfig::default()).unwrap().model;
    let (convex, subgrad) = property_violations(&model, 1000, 7);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        4,
        "max-affine regression",
        r_abs < 1e-8 && r_sq <= 7.8e-3 && convex == 0 && subgrad == 0 && secs < 5.0,
        format!(
            "|x| rmse {r_abs:.1e}, x^2 rmse {r_sq:.2e}, violations {convex}/{subgrad} of 1000, {secs:.2}s"
        ),
    );
}

#[test]
fn criterion_5_planner_against_value_iteration() {
    let start = Instant::now();
    let game = chain_mdp();
    let q = value_iteration(&game).unwrap();
    let model = TabularModel::new(game).unwrap();
    let errors: Vec<f64> = [100, 500, 2000]
        .into_iter()
        .map(|n_queries| {
            let cfg = PlannerConfig {
                n_queries,
                ..PlannerConfig::default()
            };
            let samples = plan(&[0.0], &model, &RandomRollout, &cfg).unwrap();
            let best = samples.iter().max_by(|a, b| a.value.total_cmp(&b.value)).unwrap();
            let star = q.q[0][0][best.action[0] as usize];
            (best.value - star).abs() / star.abs()
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        5,
        "planner on the chain MDP",
        errors[2] <= 0.05 && errors[0] > errors[1] && errors[1] > errors[2] && secs < 30.0,
        format!(
            "relative errors {:.4} / {:.4} / {:.4} at L = 100 / 500 / 2000, {secs:.2}s",
            errors[0], errors[1], errors[2]
        ),
    );
}

#[test]
fn criterion_6_rollout_flow() {
    let cfg = RolloutConfig::default();
    let out = rollout_converge(&[0.0; 4], &[0.0, 0.0, 1.0, 0.0], &Topology::complete(2).unwrap(), &cfg).unwrap();
    let err = out
        .state
        .iter()
        .zip([-0.5, 0.0, 0.5, 0.0])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let elapsed = (out.steps as f64 * cfg.euler_dt).max(cfg.euler_dt);
    let drift = ((out.state[0] + out.state[2]) / 2.0).hypot((out.state[1] + out.state[3]) / 2.0) / elapsed;
    verdict(
        6,
        "two-agent formation flow",
        out.converged && err <= 1e-4 && drift < 1e-9,
        format!("max error {err:.1e} after {elapsed:.2} time units, centroid drift {drift:.1e} per unit time"),
    );
}

const CONFIGS: [&str; 3] = ["g1", "switching", "g3"];
const SEEDS: [u64; 3] = [1, 2, 3];

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.toml"))
}

struct Suite {
    /// `(config, seed, records in [`Algorithm::ALL`] order)`.
    runs: Vec<(&'static str, u64, Vec<RunRecord>)>,
    elapsed: Duration,
}

fn suite() -> &'static Suite {
    static SUITE: OnceLock<Suite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let start = Instant::now();
        let mut runs = Vec::new();
        for name in CONFIGS {
            let exp = ExperimentConfig::load(&config_path(name))
                .and_then(|c| c.resolve_experiment())
                .unwrap();
            for seed in SEEDS {
                let records = Algorithm::ALL
                    .iter()
                    .map(|&algo| harness::run(&exp, algo, seed).unwrap())
                    .collect();
                runs.push((name, seed, records));
            }
        }
        Suite {
            runs,
            elapsed: start.elapsed(),
        }
    })
}

fn by_algo(records: &[RunRecord], algo: Algorithm) -> &RunRecord {
    records.iter().find(|r| r.meta.algorithm == algo).unwrap()
}

#[test]
fn criterion_7_desk_scale_ordering() {
    let s = suite();
    let mut failures = Vec::new();
    for (name, seed, records) in &s.runs {
        let proposed = by_algo(records, Algorithm::Proposed);
        let pomcpow = by_algo(records, Algorithm::PomcpowBaseline);
        let rollout = by_algo(records, Algorithm::RolloutBaseline);
        let optimal = by_algo(records, Algorithm::Optimal);
        let (p, b, r, o) = (
            proposed.worst_cumulative(),
            pomcpow.worst_cumulative(),
            rollout.worst_cumulative(),
            optimal.worst_cumulative(),
        );
        println!(
            "  {name} seed {seed}: worst-agent cumulative proposed {p:.2}, pomcpow {b:.2}, rollout {r:.2}, optimal {o:.2}"
        );
        if p <= b {
            failures.push(format!("{name}/{seed}: proposed {p:.2} <= pomcpow {b:.2}"));
        }
        if p <= r {
            failures.push(format!("{name}/{seed}: proposed {p:.2} <= rollout {r:.2}"));
        }
        if *name == "g1" {
            let pf = proposed.final_worst_reward().unwrap();
            let of = optimal.final_worst_reward().unwrap();
            println!("  g1 seed {seed}: final worst reward proposed {pf:.4}, optimal {of:.4}");
            if (pf - of).abs() > 0.5 {
                failures.push(format!("g1/{seed}: final worst reward {pf:.3} not within 0.5 of {of:.3}"));
            }
        }
    }
    let secs = s.elapsed.as_secs_f64();
    if secs >= 15.0 * 60.0 {
        failures.push(format!("runtime {secs:.0}s exceeds 15 min"));
    }
    let detail = if failures.is_empty() {
        format!("all orderings hold, {secs:.1}s")
    } else {
        format!("{} violations in {secs:.1}s: {}", failures.len(), failures.join("; "))
    };
    verdict(7, "desk-scale ordering", failures.is_empty(), detail);
}

#[test]
fn criterion_8_locality_audit() {
    let s = suite();
    let records = s.runs.iter().flat_map(|(_, _, r)| r);
    let violations: usize = records.clone().map(|r| r.meta.locality_violations).sum();
    let reads: u64 = records.map(|r| r.meta.bus_reads).sum();
    verdict(
        8,
        "locality audit",
        violations == 0 && reads > 0,
        format!("{violations} non-neighbor reads out of {reads} bus reads"),
    );
}

#[test]
fn criterion_9_determinism() {
    let s = suite();
    let tmp = tempfile::tempdir().unwrap();
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for name in CONFIGS {
        let exp = ExperimentConfig::load(&config_path(name))
            .and_then(|c| c.resolve_experiment())
            .unwrap();
        let seed = SEEDS[0];
        let first = &s.runs.iter().find(|(n, sd, _)| *n == name && *sd == seed).unwrap().2;
        for (k, algo) in Algorithm::ALL.iter().enumerate() {
            let again = harness::run(&exp, *algo, seed).unwrap();
            let (a, b) = (tmp.path().join(format!("{name}-{k}-a")), tmp.path().join(format!("{name}-{k}-b")));
            first[k].write_dir(&a).unwrap();
            again.write_dir(&b).unwrap();
            let read = |d: &Path| std::fs::read(d.join("records.csv")).unwrap();
            if read(&a) != read(&b) {
                mismatches.push(format!("{name}/{algo}"));
            }
            checked += 1;
        }
    }
    verdict(
        9,
        "bit-identical reruns",
        mismatches.is_empty(),
        format!("{checked} reruns compared, mismatches: {mismatches:?}"),
    );
}
