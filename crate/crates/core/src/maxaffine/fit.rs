use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lsq::fit_cell;
use super::model::MaxAffineModel;
use crate::error::{Error, Result};
use crate::rng::{rng_for, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub n_hyperplanes: usize,
    pub ensemble_size: usize,
    /// Least-squares / reassignment sweeps per partition.
    pub lspa_iters: usize,
    /// Drop-one / split-one restructuring attempts per ensemble member.
    pub improvement_rounds: usize,
    pub validation_fraction: f64,
    pub rng_seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_hyperplanes: 8,
            ensemble_size: 4,
            lspa_iters: 20,
            improvement_rounds: 2,
            validation_fraction: 0.2,
            rng_seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_hyperplanes == 0 || self.ensemble_size == 0 || self.lspa_iters == 0 {
            return Err(Error::Config(
                "fit n_hyperplanes, ensemble_size and lspa_iters must be positive".into(),
            ));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config("fit.validation_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub model: MaxAffineModel,
    /// RMSE of the returned model over every sample.
    pub rmse: f64,
    pub validation_rmse: f64,
    pub chosen_member: usize,
    /// Cells that needed ridge damping, summed over all least-squares solves.
    pub ridge_cells: usize,
    /// Every cell assignment computed during the fit, in order.
    pub partition_trace: Vec<Vec<usize>>,
}

/// Fits a max-affine model to `(xs, ys)`; returns the ensemble member with the
/// lowest held-out RMSE after a final refinement on all samples.
pub fn fit(xs: &[Vec<f64>], ys: &[f64], cfg: &FitConfig) -> Result<MaxAffineModel> {
    fit_with_report(xs, ys, cfg).map(|r| r.model)
}

struct Planes {
    weights: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl Planes {
    fn model(&self) -> MaxAffineModel {
        let dim = self.weights[0].len();
        MaxAffineModel::new(dim, self.weights.concat(), self.offsets.clone())
            .expect("planes are consistent")
    }
}

struct Fitter<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [f64],
    cfg: &'a FitConfig,
    ridge_cells: usize,
    trace: Vec<Vec<usize>>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn sse(model: &MaxAffineModel, xs: &[Vec<f64>], ys: &[f64], idx: &[usize]) -> f64 {
    idx.iter()
        .map(|&i| {
            let r = model.active(&xs[i]).1 - ys[i];
            r * r
        })
        .sum()
}

/// Groups `idx` by cell label, dropping empty cells; cells are ordered by label.
fn cells_of(idx: &[usize], assign: &[usize]) -> Vec<Vec<usize>> {
    let n_labels = assign.iter().copied().max().map_or(0, |m| m + 1);
    let mut cells = vec![Vec::new(); n_labels];
    for (&i, &a) in idx.iter().zip(assign) {
        cells[a].push(i);
    }
    cells.retain(|c| !c.is_empty());
    cells
}

impl<'a> Fitter<'a> {
    fn fit_cells(&mut self, cells: &[Vec<usize>]) -> Planes {
        let mut weights = Vec::with_capacity(cells.len());
        let mut offsets = Vec::with_capacity(cells.len());
        for cell in cells {
            let f = fit_cell(self.xs, self.ys, cell);
            self.ridge_cells += usize::from(f.ridge);
            weights.push(f.weight);
            offsets.push(f.offset);
        }
        Planes { weights, offsets }
    }

    fn cell_sse(&self, planes: &Planes, h: usize, cell: &[usize]) -> f64 {
        cell.iter()
            .map(|&i| {
                let x = &self.xs[i];
                let v: f64 = planes.weights[h].iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
                    + planes.offsets[h];
                (v - self.ys[i]).powi(2)
            })
            .sum()
    }

    /// Splits `cell` in two with a deterministic 2-means; `None` when all
    /// inputs coincide.
    fn split(&self, cell: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
        if cell.len() < 2 {
            return None;
        }
        let dim = self.xs[cell[0]].len();
        let mut centroid = vec![0.0; dim];
        for &i in cell {
            for (c, v) in centroid.iter_mut().zip(&self.xs[i]) {
                *c += v / cell.len() as f64;
            }
        }
        let far = |from: &[f64]| {
            cell.iter()
                .copied()
                .max_by(|&a, &b| sq_dist(&self.xs[a], from).total_cmp(&sq_dist(&self.xs[b], from)))
                .expect("non-empty cell")
        };
        let a = far(&centroid);
        let b = far(&self.xs[a]);
        if sq_dist(&self.xs[a], &self.xs[b]) == 0.0 {
            return None;
        }
        let mut centers = [self.xs[a].clone(), self.xs[b].clone()];
        let mut groups = (Vec::new(), Vec::new());
        for _ in 0..10 {
            groups = (Vec::new(), Vec::new());
            for &i in cell {
                if sq_dist(&self.xs[i], &centers[0]) <= sq_dist(&self.xs[i], &centers[1]) {
                    groups.0.push(i);
                } else {
                    groups.1.push(i);
                }
            }
            if groups.0.is_empty() || groups.1.is_empty() {
                return None;
            }
            for (center, group) in centers.iter_mut().zip([&groups.0, &groups.1]) {
                center.iter_mut().for_each(|c| *c = 0.0);
                for &i in group {
                    for (c, v) in center.iter_mut().zip(&self.xs[i]) {
                        *c += v / group.len() as f64;
                    }
                }
            }
        }
        Some(groups)
    }

    /// Fits the cells, splitting the worst splittable cell until `h` cells exist.
    fn fit_restoring(&mut self, mut cells: Vec<Vec<usize>>, h: usize) -> (Vec<Vec<usize>>, Planes) {
        let mut planes = self.fit_cells(&cells);
        while cells.len() < h {
            let mut order: Vec<(usize, f64)> = cells
                .iter()
                .enumerate()
                .map(|(k, c)| (k, self.cell_sse(&planes, k, c)))
                .collect();
            order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let Some((k, (left, right))) = order
                .iter()
                .find_map(|&(k, _)| self.split(&cells[k]).map(|s| (k, s)))
            else {
                break;
            };
            cells[k] = left;
            cells.push(right);
            planes = self.fit_cells(&cells);
        }
        (cells, planes)
    }

    /// Alternates per-cell least squares with argmax reassignment; returns the
    /// best model seen (by SSE over `idx`).
    fn lspa(&mut self, idx: &[usize], mut assign: Vec<usize>, h: usize) -> (MaxAffineModel, f64) {
        let mut best: Option<(MaxAffineModel, f64)> = None;
        for _ in 0..self.cfg.lspa_iters {
            let cells = cells_of(idx, &assign);
            if cells.len() < h {
                // a collapsed partition can beat its restored version
                let collapsed = self.fit_cells(&cells).model();
                let err = sse(&collapsed, self.xs, self.ys, idx);
                if best.as_ref().is_none_or(|(_, e)| err < *e) {
                    best = Some((collapsed, err));
                }
            }
            let (_, planes) = self.fit_restoring(cells, h);
            let model = planes.model();
            let err = sse(&model, self.xs, self.ys, idx);
            if best.as_ref().is_none_or(|(_, e)| err < *e) {
                best = Some((model.clone(), err));
            }
            let next: Vec<usize> = idx.iter().map(|&i| model.active(&self.xs[i]).0).collect();
            self.trace.push(next.clone());
            if same_partition(&next, &assign) {
                break;
            }
            assign = next;
        }
        best.expect("at least one sweep")
    }

    /// Removes the least useful hyperplane, splits the worst cell and re-runs
    /// the sweeps; keeps the result only if it lowers the error.
    fn improve(&mut self, idx: &[usize], model: MaxAffineModel, err: f64, h: usize) -> (MaxAffineModel, f64) {
        if model.n_hyperplanes() < 2 {
            return (model, err);
        }
        let reduced = (0..model.n_hyperplanes())
            .map(|drop| {
                let keep: Vec<usize> = (0..model.n_hyperplanes()).filter(|&k| k != drop).collect();
                let m = MaxAffineModel::new(
                    model.dim(),
                    keep.iter().flat_map(|&k| model.weight(k).to_vec()).collect(),
                    keep.iter().map(|&k| model.offsets()[k]).collect(),
                )
                .expect("subset of a valid model");
                let e = sse(&m, self.xs, self.ys, idx);
                (m, e)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least two hyperplanes")
            .0;
        let assign: Vec<usize> = idx.iter().map(|&i| reduced.active(&self.xs[i]).0).collect();
        self.trace.push(assign.clone());
        let (candidate, cand_err) = self.lspa(idx, assign, h);
        if cand_err < err {
            (candidate, cand_err)
        } else {
            (model, err)
        }
    }
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a == b
}

/// Seeded k-means++ followed by Lloyd sweeps; returns a cell label per sample.
fn kmeans<R: Rng>(xs: &[Vec<f64>], idx: &[usize], k: usize, rng: &mut R) -> Vec<usize> {
    let mut centers: Vec<Vec<f64>> = vec![xs[idx[rng.random_range(0..idx.len())]].clone()];
    while centers.len() < k {
        let d2: Vec<f64> = idx
            .iter()
            .map(|&i| centers.iter().map(|c| sq_dist(&xs[i], c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        if total == 0.0 {
            break;
        }
        let mut draw = rng.random_range(0.0..total);
        let mut pick = idx.len() - 1;
        for (p, d) in d2.iter().enumerate() {
            if draw < *d {
                pick = p;
                break;
            }
            draw -= d;
        }
        centers.push(xs[idx[pick]].clone());
    }
    let nearest = |x: &[f64], centers: &[Vec<f64>]| {
        (0..centers.len())
            .min_by(|&a, &b| sq_dist(x, &centers[a]).total_cmp(&sq_dist(x, &centers[b])))
            .expect("at least one center")
    };
    let mut assign: Vec<usize> = idx.iter().map(|&i| nearest(&xs[i], &centers)).collect();
    for _ in 0..10 {
        let dim = xs[idx[0]].len();
        let mut sums = vec![vec![0.0; dim]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (&i, &a) in idx.iter().zip(&assign) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(&xs[i]) {
                *s += v;
            }
        }
        for (c, (s, n)) in centers.iter_mut().zip(sums.into_iter().zip(counts)) {
            if n > 0 {
                *c = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
        let next: Vec<usize> = idx.iter().map(|&i| nearest(&xs[i], &centers)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    assign
}

pub fn fit_with_report(xs: &[Vec<f64>], ys: &[f64], cfg: &FitConfig) -> Result<FitReport> {
    cfg.validate()?;
    let n = xs.len();
    if n == 0 || ys.len() != n {
        return Err(Error::Fit(format!("{n} inputs but {} targets", ys.len())));
    }
    let dim = xs[0].len();
    if dim == 0 || xs.iter().any(|x| x.len() != dim) {
        return Err(Error::Fit("inputs must share a positive dimension".into()));
    }
    if xs.iter().flatten().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Fit("samples contain non-finite values".into()));
    }
    let h = cfg.n_hyperplanes;
    let min_train = h.max(dim + 1);
    if n < min_train {
        return Err(Error::Fit(format!(
            "{n} samples cannot support {h} hyperplanes in dimension {dim} (need {min_train})"
        )));
    }
    let n_val = ((cfg.validation_fraction * n as f64).floor() as usize).min(n - min_train);

    let mut fitter = Fitter {
        xs,
        ys,
        cfg,
        ridge_cells: 0,
        trace: Vec::new(),
    };
    let mut best: Option<(usize, MaxAffineModel, f64)> = None;
    for member in 0..cfg.ensemble_size {
        let mut rng = rng_for(cfg.rng_seed, Stream::Fit, &[member as u64]);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let (val, train) = order.split_at(n_val);
        let (mut val, mut train) = (val.to_vec(), train.to_vec());
        val.sort_unstable();
        train.sort_unstable();

        let assign = kmeans(xs, &train, h, &mut rng);
        fitter.trace.push(assign.clone());
        let (mut model, mut err) = fitter.lspa(&train, assign, h);
        for _ in 0..cfg.improvement_rounds {
            (model, err) = fitter.improve(&train, model, err, h);
        }
        let held_out = if val.is_empty() { &train } else { &val };
        let rmse = (sse(&model, xs, ys, held_out) / held_out.len() as f64).sqrt();
        if best.as_ref().is_none_or(|(_, _, r)| rmse < *r) {
            best = Some((member, model, rmse));
        }
    }
    let (chosen_member, model, validation_rmse) = best.expect("ensemble is non-empty");

    let all: Vec<usize> = (0..n).collect();
    let base_err = sse(&model, xs, ys, &all);
    let assign: Vec<usize> = all.iter().map(|&i| model.active(&xs[i]).0).collect();
    fitter.trace.push(assign.clone());
    let (refined, refined_err) = fitter.lspa(&all, assign, h);
    let (model, err) = if refined_err < base_err {
        (refined, refined_err)
    } else {
        (model, base_err)
    };

    Ok(FitReport {
        model,
        rmse: (err / n as f64).sqrt(),
        validation_rmse,
        chosen_member,
        ridge_cells: fitter.ridge_cells,
        partition_trace: fitter.trace,
    })
}
