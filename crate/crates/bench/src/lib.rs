//! Shared fixtures for the criterion benchmarks.

use std::path::Path;

use maxmin_core::harness::{Experiment, ExperimentConfig};
use maxmin_core::Result;

const G1: &str = r#"
[experiment]
name = "bench"
horizon = 30
seed = 1

[topology]
preset = "G1"

[formation]
polygon_radius = 2.0
initial = [[0.0, 0.0], [-1.5, 2.0], [2.5, -1.0], [1.0, 3.0], [-2.0, -1.5]]

[planner]
n_queries = 50

[optimizer]
n_iters = 500
"#;

/// The desk-scale five-agent G1 experiment with the given horizon.
pub fn g1(horizon: usize) -> Result<Experiment> {
    let src = G1.replace("horizon = 30", &format!("horizon = {horizon}"));
    ExperimentConfig::from_toml(&src, Path::new("bench.toml"))?.resolve_experiment()
}

/// Deterministic scattered points in `[0, 1]^dim` with a convex target.
pub fn convex_samples(n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|k| (0..dim).map(|d| ((k * (2 * d + 3)) as f64 * 0.618_034).fract()).collect())
        .collect();
    let ys = xs
        .iter()
        .map(|x| x.iter().enumerate().map(|(d, v)| (v - 0.1 * d as f64).powi(2)).sum::<f64>())
        .collect();
    (xs, ys)
}
