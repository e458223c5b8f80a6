use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `f(x) = max_h (w_h . x + b_h)` with `H >= 1` hyperplanes over `R^D`.
///
/// Serializes as a flat record `{"H": .., "D": .., "weights": [row-major H x D], "offsets": [H]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRecord", into = "ModelRecord")]
pub struct MaxAffineModel {
    dim: usize,
    weights: Vec<f64>,
    offsets: Vec<f64>,
    // added after the max so that `offset` shifts evaluations exactly
    shift: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    #[serde(rename = "H")]
    n_hyperplanes: usize,
    #[serde(rename = "D")]
    dim: usize,
    weights: Vec<f64>,
    offsets: Vec<f64>,
}

impl TryFrom<ModelRecord> for MaxAffineModel {
    type Error = Error;

    fn try_from(r: ModelRecord) -> Result<Self> {
        if r.offsets.len() != r.n_hyperplanes {
            return Err(Error::arg(format!(
                "record declares H={} but has {} offsets",
                r.n_hyperplanes,
                r.offsets.len()
            )));
        }
        Self::new(r.dim, r.weights, r.offsets)
    }
}

impl From<MaxAffineModel> for ModelRecord {
    fn from(m: MaxAffineModel) -> Self {
        let shift = m.shift;
        ModelRecord {
            n_hyperplanes: m.offsets.len(),
            dim: m.dim,
            weights: m.weights,
            offsets: m.offsets.into_iter().map(|b| b + shift).collect(),
        }
    }
}

impl MaxAffineModel {
    pub fn new(dim: usize, weights: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::arg("a max-affine model needs at least one hyperplane"));
        }
        if weights.len() != offsets.len() * dim {
            return Err(Error::arg(format!(
                "{} weights do not form {} rows of dimension {dim}",
                weights.len(),
                offsets.len()
            )));
        }
        Ok(Self {
            dim,
            weights,
            offsets,
            shift: 0.0,
        })
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self {
            dim,
            weights: vec![0.0; dim],
            offsets: vec![c],
            shift: 0.0,
        }
    }

    pub fn affine(weight: Vec<f64>, offset: f64) -> Self {
        Self {
            dim: weight.len(),
            weights: weight,
            offsets: vec![offset],
            shift: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_hyperplanes(&self) -> usize {
        self.offsets.len()
    }

    pub fn weight(&self, h: usize) -> &[f64] {
        &self.weights[h * self.dim..(h + 1) * self.dim]
    }

    /// Effective offsets `b_h`, including any shift applied by [`offset`](Self::offset).
    pub fn offsets(&self) -> Vec<f64> {
        self.offsets.iter().map(|b| b + self.shift).collect()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::arg(format!(
                "input has dimension {}, model expects {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub(crate) fn piece_value(&self, h: usize, x: &[f64]) -> f64 {
        self.weight(h).iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.offsets[h]
    }

    /// Maximizing hyperplane and its value; ties go to the lowest index.
    pub(crate) fn active(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, self.piece_value(0, x));
        for h in 1..self.n_hyperplanes() {
            let v = self.piece_value(h, x);
            if v > best.1 {
                best = (h, v);
            }
        }
        best
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.active(x).1 + self.shift)
    }

    /// Gradient of the active hyperplane, a valid subgradient of the model at `x`.
    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(self.weight(self.active(x).0).to_vec())
    }

    /// Shifts every offset by `c`: `eval(offset(m, c), x) == eval(m, x) + c`.
    pub fn offset(&self, c: f64) -> Self {
        Self {
            shift: self.shift + c,
            ..self.clone()
        }
    }

    /// Multiplies the whole model by `factor >= 0`, which preserves convexity.
    pub fn scale(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) {
            return Err(Error::arg("max-affine models can only be scaled by a nonnegative factor"));
        }
        Ok(Self {
            dim: self.dim,
            weights: self.weights.iter().map(|w| w * factor).collect(),
            offsets: self.offsets.iter().map(|b| b * factor).collect(),
            shift: self.shift * factor,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// A model over a neighborhood slice embedded in a larger joint space:
/// coordinate `k` of the model reads joint coordinate `coords[k]`, and every
/// other joint coordinate carries zero weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedModel {
    model: MaxAffineModel,
    coords: Vec<usize>,
    joint_dim: usize,
}

impl LiftedModel {
    pub fn new(model: MaxAffineModel, coords: Vec<usize>, joint_dim: usize) -> Result<Self> {
        if coords.len() != model.dim() || coords.iter().any(|&c| c >= joint_dim) {
            return Err(Error::arg("lifting coordinates do not match the model or joint space"));
        }
        Ok(Self {
            model,
            coords,
            joint_dim,
        })
    }

    pub fn model(&self) -> &MaxAffineModel {
        &self.model
    }

    pub fn joint_dim(&self) -> usize {
        self.joint_dim
    }

    fn gather(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.joint_dim {
            return Err(Error::arg(format!(
                "joint input has dimension {}, expected {}",
                x.len(),
                self.joint_dim
            )));
        }
        Ok(self.coords.iter().map(|&c| x[c]).collect())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.model.eval(&self.gather(x)?)
    }

    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let local = self.model.subgradient(&self.gather(x)?)?;
        let mut g = vec![0.0; self.joint_dim];
        for (&c, v) in self.coords.iter().zip(local) {
            g[c] = v;
        }
        Ok(g)
    }
}
