//! Affine least squares for a single partition cell.

use nalgebra::{DMatrix, DVector};

pub(crate) const RIDGE: f64 = 1e-8;

/// Fitted hyperplane `(w, b)` and whether ridge damping was needed.
pub(crate) struct CellFit {
    pub weight: Vec<f64>,
    pub offset: f64,
    pub ridge: bool,
}

/// Least-squares affine fit of `ys` on the rows `xs[idx]`. Rank-deficient
/// cells are refit with ridge damping [`RIDGE`].
pub(crate) fn fit_cell(xs: &[Vec<f64>], ys: &[f64], idx: &[usize]) -> CellFit {
    let dim = xs[idx[0]].len();
    let cols = dim + 1;
    let design = |extra: usize| {
        let mut a = DMatrix::<f64>::zeros(idx.len() + extra, cols);
        let mut b = DVector::<f64>::zeros(idx.len() + extra);
        for (r, &i) in idx.iter().enumerate() {
            for (c, v) in xs[i].iter().enumerate() {
                a[(r, c)] = *v;
            }
            a[(r, dim)] = 1.0;
            b[r] = ys[i];
        }
        (a, b)
    };

    if idx.len() >= cols {
        let (a, b) = design(0);
        let qr = a.qr();
        let r = qr.r();
        let diag_max = (0..cols).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
        let full_rank = diag_max > 0.0 && (0..cols).all(|k| r[(k, k)].abs() > 1e-10 * diag_max);
        if full_rank {
            let qtb = qr.q().transpose() * b;
            if let Some(sol) = r.solve_upper_triangular(&qtb) {
                return split(sol, dim, false);
            }
        }
    }

    // augmented system [A; sqrt(lambda) I] is always full rank
    let (mut a, mut b) = design(cols);
    let damp = RIDGE.sqrt();
    for k in 0..cols {
        a[(idx.len() + k, k)] = damp;
        b[idx.len() + k] = 0.0;
    }
    let qr = a.qr();
    let qtb = qr.q().transpose() * b;
    let sol = qr
        .r()
        .solve_upper_triangular(&qtb)
        .expect("ridge-augmented system is nonsingular");
    split(sol, dim, true)
}

fn split(sol: DVector<f64>, dim: usize, ridge: bool) -> CellFit {
    CellFit {
        weight: sol.iter().take(dim).copied().collect(),
        offset: sol[dim],
        ridge,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_affine() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x[0] - 0.5 * x[1] + 2.0).collect();
        let fit = fit_cell(&xs, &ys, &[0, 1, 2, 3, 4, 5]);
        assert!(!fit.ridge);
        assert!((fit.weight[0] - 3.0).abs() < 1e-10);
        assert!((fit.weight[1] + 0.5).abs() < 1e-10);
        assert!((fit.offset - 2.0).abs() < 1e-10);
    }

    #[test]
    fn underdetermined_cell_uses_ridge() {
        let xs = vec![vec![1.0, 1.0]];
        let fit = fit_cell(&xs, &[2.0], &[0]);
        assert!(fit.ridge);
        let pred = fit.weight[0] + fit.weight[1] + fit.offset;
        assert!((pred - 2.0).abs() < 1e-6);
    }

    #[test]
    fn collinear_points_use_ridge() {
        let xs = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0], vec![4.0, 8.0]];
        let ys = [1.0, 2.0, 3.0, 4.0];
        let fit = fit_cell(&xs, &ys, &[0, 1, 2, 3]);
        assert!(fit.ridge);
        for (x, y) in xs.iter().zip(ys) {
            let pred = fit.weight[0] * x[0] + fit.weight[1] * x[1] + fit.offset;
            assert!((pred - y).abs() < 1e-6);
        }
    }
}
