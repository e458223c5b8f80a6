use maxmin_core::maxaffine::{fit, fit_with_report, FitConfig, MaxAffineModel};
use proptest::prelude::*;
use std::sync::OnceLock;

fn grid(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| vec![-1.0 + 2.0 * k as f64 / (n - 1) as f64])
        .collect()
}

fn rmse(f: impl Fn(f64) -> f64, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (f(x[0]) - y).powi(2)).sum();
    (sse / ys.len() as f64).sqrt()
}

/// Eight secants of x^2 over equal-width pieces of [-1, 1], lowered by half
/// their largest gap. Its sup error is w^2 / 8 = 7.8125e-3 for w = 1/4.
fn shifted_secants(x: f64) -> f64 {
    let w = 0.25;
    (0..8)
        .map(|k| {
            let a = -1.0 + k as f64 * w;
            let b = a + w;
            (a + b) * x - a * b - w * w / 8.0
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn square_fit_meets_the_secant_bound() {
    let xs = grid(401);
    let ys: Vec<f64> = xs.iter().map(|x| x[0] * x[0]).collect();
    let oracle = rmse(shifted_secants, &xs, &ys);
    let sup = xs
        .iter()
        .map(|x| (shifted_secants(x[0]) - x[0] * x[0]).abs())
        .fold(0.0, f64::max);
    assert!((sup - 7.8125e-3).abs() < 1e-12, "{sup}");
    let report = fit_with_report(&xs, &ys, &FitConfig::default()).unwrap();
    assert!(report.model.n_hyperplanes() <= 8);
    assert!(
        report.rmse <= 7.8e-3,
        "fit {} vs secant oracle {oracle}",
        report.rmse
    );
}

#[test]
fn abs_is_recovered_with_two_planes() {
    let xs = grid(201);
    let ys: Vec<f64> = xs.iter().map(|x| x[0].abs()).collect();
    let cfg = FitConfig {
        n_hyperplanes: 2,
        ..FitConfig::default()
    };
    assert!(fit_with_report(&xs, &ys, &cfg).unwrap().rmse < 1e-8);
}

#[test]
fn scaling_targets_scales_the_fit() {
    let xs: Vec<Vec<f64>> = (0..120)
        .map(|k| {
            let t = k as f64 * 0.61;
            vec![t.sin(), (1.7 * t).cos()]
        })
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| (x[0] - 0.2).powi(2) + x[1].abs())
        .collect();
    let scaled: Vec<f64> = ys.iter().map(|y| 2.0 * y).collect();
    let cfg = FitConfig::default();
    let a = fit_with_report(&xs, &ys, &cfg).unwrap();
    let b = fit_with_report(&xs, &scaled, &cfg).unwrap();
    assert_eq!(a.partition_trace, b.partition_trace);
    for x in &xs {
        let (u, v) = (a.model.eval(x).unwrap(), b.model.eval(x).unwrap());
        assert!((2.0 * u - v).abs() < 1e-9 * (1.0 + v.abs()));
    }
}

fn fitted() -> &'static MaxAffineModel {
    static MODEL: OnceLock<MaxAffineModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let xs: Vec<Vec<f64>> = (0..300)
            .map(|k| {
                let t = k as f64 * 0.37;
                vec![2.0 * t.sin(), 2.0 * (0.53 * t).cos(), (1.3 * t).sin()]
            })
            .collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| x[0] * x[0] + (x[1] - x[2]).abs() + 0.5 * x[2])
            .collect();
        fit(&xs, &ys, &FitConfig::default()).unwrap()
    })
}

fn probe() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fitted_model_is_convex(x in probe(), y in probe(), lam in 0.0f64..=1.0) {
        let m = fitted();
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
        let lhs = m.eval(&mid).unwrap();
        let rhs = lam * m.eval(&x).unwrap() + (1.0 - lam) * m.eval(&y).unwrap();
        prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn subgradient_inequality_holds(x in probe(), y in probe()) {
        let m = fitted();
        let g = m.subgradient(&x).unwrap();
        let fx = m.eval(&x).unwrap();
        let lin = fx + g.iter().zip(y.iter().zip(&x)).map(|(gi, (yi, xi))| gi * (yi - xi)).sum::<f64>();
        prop_assert!(m.eval(&y).unwrap() >= lin - 1e-9 * (1.0 + lin.abs()));
    }
}
