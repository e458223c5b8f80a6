#![allow(clippy::needless_range_loop)]

use maxmin_core::minmax::{self, metropolis, AgentIterate, FnObjective, LocalObjective, LocalityAudit, OptimizerConfig};
use maxmin_core::{ActionBox, Topology, TopologySchedule};

type Quad = FnObjective<Box<dyn Fn(&[f64]) -> f64 + Send + Sync>, Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>>;

fn quadratic(c: f64) -> Quad {
    FnObjective {
        value: Box::new(move |a: &[f64]| (a[0] - c).powi(2)),
        subgradient: Box::new(move |a: &[f64]| vec![2.0 * (a[0] - c)]),
    }
}

/// Runs the solver on `f_i(a) = (a - centers[i])^2` over a path graph.
fn solve(centers: &[f64], n_iters: usize) -> (Vec<AgentIterate>, f64, LocalityAudit) {
    let objs: Vec<Quad> = centers.iter().map(|&c| quadratic(c)).collect();
    let refs: Vec<&dyn LocalObjective> = objs.iter().map(|o| o as &dyn LocalObjective).collect();
    let feasible = ActionBox::uniform(1, -10.0, 10.0).unwrap();
    let cfg = OptimizerConfig {
        n_iters,
        ..OptimizerConfig::default()
    };
    let audit = LocalityAudit::new();
    let net = TopologySchedule::fixed(Topology::path(centers.len()).unwrap());
    let init = minmax::init_iterates(&refs, &feasible).unwrap();
    let out = minmax::run(&net, &refs, &cfg, init, &feasible, &audit).unwrap();
    let dis = *out.disagreement.last().unwrap_or(&0.0);
    (out.iterates, dis, audit)
}

/// Largest distance of any agent's estimate from the analytic optimum.
fn error(iterates: &[AgentIterate], alpha: f64, eta: f64) -> f64 {
    iterates
        .iter()
        .map(|z| (z.alpha[0] - alpha).abs().max((z.eta - eta).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn three_agent_quadratic_reaches_the_analytic_optimum() {
    // min_a max{a^2, (a-1)^2, (a-2)^2} is attained at a = 1 with value 1
    let (z, dis, audit) = solve(&[0.0, 1.0, 2.0], 20_000);
    assert!(error(&z, 1.0, 1.0) <= 5e-2, "{z:?}");
    assert!(dis < 1e-2, "{dis}");
    assert!(audit.is_clean());
    assert!(audit.reads() > 0);
}

#[test]
fn relabeling_agents_mirrors_the_run() {
    let (a, _, _) = solve(&[0.0, 1.0, 2.0], 5_000);
    let (b, _, _) = solve(&[2.0, 1.0, 0.0], 5_000);
    for (x, y) in a.iter().zip(b.iter().rev()) {
        assert!((x.alpha[0] - y.alpha[0]).abs() < 1e-9);
        assert!((x.eta - y.eta).abs() < 1e-9);
    }
}

#[test]
fn error_does_not_grow_with_more_rounds() {
    let errs: Vec<f64> = [2_000, 20_000, 200_000]
        .into_iter()
        .map(|k| error(&solve(&[0.0, 1.0, 2.0], k).0, 1.0, 1.0))
        .collect();
    assert!(errs[1] <= errs[0] && errs[2] <= errs[1], "{errs:?}");
}

#[test]
fn zero_rounds_keep_the_initial_iterates() {
    let objs = [quadratic(0.0), quadratic(3.0)];
    let refs: Vec<&dyn LocalObjective> = objs.iter().map(|o| o as &dyn LocalObjective).collect();
    let feasible = ActionBox::uniform(1, -10.0, 10.0).unwrap();
    let init = minmax::init_iterates(&refs, &feasible).unwrap();
    let cfg = OptimizerConfig {
        n_iters: 0,
        ..OptimizerConfig::default()
    };
    let net = TopologySchedule::fixed(Topology::complete(2).unwrap());
    let out = minmax::run(&net, &refs, &cfg, init.clone(), &feasible, &LocalityAudit::new()).unwrap();
    assert_eq!(out.iterates, init);
    assert!(out.disagreement.is_empty());
}

#[test]
fn metropolis_matrices_are_doubly_stochastic() {
    let graphs = [
        Topology::g1(),
        Topology::g2(),
        Topology::g3(),
        Topology::path(6).unwrap(),
        Topology::star(5).unwrap(),
        Topology::complete(4).unwrap(),
        Topology::new(3, []).unwrap(),
    ];
    for g in graphs {
        let w = metropolis(&g).dense();
        let n = w.len();
        for i in 0..n {
            assert!((w[i].iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(((0..n).map(|r| w[r][i]).sum::<f64>() - 1.0).abs() <= 1e-12);
            for j in 0..n {
                assert_eq!(w[i][j], w[j][i]);
                assert!(w[i][j] >= 0.0);
                if i != j && !g.has_edge(i, j) {
                    assert_eq!(w[i][j], 0.0);
                }
            }
        }
    }
}
