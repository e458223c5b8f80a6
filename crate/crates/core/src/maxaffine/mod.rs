//! Convex piecewise-linear (max-affine) surrogates.
//!
//! A model is `f(x) = max_h (w_h . x + b_h)`. Fitting alternates per-cell least
//! squares with reassignment of samples to their maximizing hyperplane, over
//! an ensemble of seeded partitions; see [`fit`].

mod fit;
mod lsq;
mod model;

pub use fit::{fit, fit_with_report, FitConfig, FitReport};
pub use model::{LiftedModel, MaxAffineModel};

pub(crate) use lsq::fit_cell;
