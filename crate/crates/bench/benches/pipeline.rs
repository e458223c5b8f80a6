use criterion::{criterion_group, criterion_main, Criterion};
use maxmin_bench::{convex_samples, g1};
use maxmin_core::formation::{local_generative_model, FormationRollout};
use maxmin_core::harness::{self, Algorithm};
use maxmin_core::maxaffine::{fit, FitConfig};
use maxmin_core::minmax::{self, FnObjective, LocalObjective, LocalityAudit, OptimizerConfig};
use maxmin_core::oracles::{optimal_openloop, OpenLoopConfig};
use maxmin_core::planner::Planner;
use maxmin_core::rng::SimRng;
use maxmin_core::{ActionBox, Topology, TopologySchedule};
use rand::SeedableRng;
use std::hint::black_box;

fn planning(c: &mut Criterion) {
    let exp = g1(30).unwrap();
    let topo = exp.schedule.at(0);
    let model = local_generative_model(topo, &exp.env.spec, 0, exp.env.pair_mode).unwrap();
    let rollout = FormationRollout::new(&model, exp.config.rollout.clone()).unwrap();
    let members = model.members().to_vec();
    let root = exp.initial.project(&members).unwrap();
    c.bench_function("plan g1 agent 1, L=50", |b| {
        b.iter(|| {
            let mut rng = SimRng::seed_from_u64(1);
            Planner::new(&model, &rollout, &exp.config.planner).run(black_box(&root), &mut rng).unwrap()
        })
    });
}

fn fitting(c: &mut Criterion) {
    let (xs, ys) = convex_samples(200, 4);
    c.bench_function("fit 200 samples in 4-d, H=8", |b| b.iter(|| fit(black_box(&xs), &ys, &FitConfig::default()).unwrap()));
}

fn optimizing(c: &mut Criterion) {
    let objs: Vec<_> = (0..5)
        .map(|i| {
            let c = i as f64 / 4.0;
            FnObjective {
                value: move |a: &[f64]| a.iter().map(|v| (v - c).powi(2)).sum::<f64>(),
                subgradient: move |a: &[f64]| a.iter().map(|v| 2.0 * (v - c)).collect::<Vec<f64>>(),
            }
        })
        .collect();
    let refs: Vec<&dyn LocalObjective> = objs.iter().map(|o| o as &dyn LocalObjective).collect();
    let feasible = ActionBox::unit(10);
    let cfg = OptimizerConfig {
        n_iters: 500,
        ..OptimizerConfig::default()
    };
    let net = TopologySchedule::fixed(Topology::g1());
    c.bench_function("min-max 5 agents, 10-d, K=500", |b| {
        b.iter(|| {
            let init = minmax::init_iterates(&refs, &feasible).unwrap();
            minmax::run(&net, &refs, &cfg, init, &feasible, &LocalityAudit::new()).unwrap()
        })
    });
}

fn oracle_and_steps(c: &mut Criterion) {
    let exp = g1(30).unwrap();
    let cfg = OpenLoopConfig {
        n_iters: 2_000,
        ..OpenLoopConfig::default()
    };
    c.bench_function("open-loop oracle T=30, 2000 iterations", |b| {
        b.iter(|| optimal_openloop(&exp.env, &exp.schedule, &exp.initial, 30, &cfg).unwrap())
    });
    let short = g1(2).unwrap();
    let mut group = c.benchmark_group("two timesteps");
    group.sample_size(10);
    group.bench_function("proposed", |b| b.iter(|| harness::run(&short, Algorithm::Proposed, 1).unwrap()));
    group.bench_function("rollout baseline", |b| {
        b.iter(|| harness::run(&short, Algorithm::RolloutBaseline, 1).unwrap())
    });
    group.finish();
}

criterion_group!(benches, planning, fitting, optimizing, oracle_and_steps);
criterion_main!(benches);
