//! Factored joint vectors, neighborhood projections and box action sets.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-agent vectors of equal dimension stored contiguously, agent-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointVec {
    dim: usize,
    data: Vec<f64>,
}

pub type JointState = JointVec;
pub type JointAction = JointVec;

impl JointVec {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 || data.is_empty() {
            return Err(Error::arg(format!(
                "joint vector of length {} is not a positive multiple of dimension {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(n_agents: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; n_agents * dim],
        }
    }

    pub fn from_agents(per_agent: &[Vec<f64>]) -> Result<Self> {
        let dim = per_agent.first().map_or(0, Vec::len);
        if per_agent.iter().any(|v| v.len() != dim) {
            return Err(Error::arg("agent substates have mismatched dimensions"));
        }
        Self::new(dim, per_agent.concat())
    }

    pub fn n_agents(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn agent_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn check(&self, indices: &[usize]) -> Result<()> {
        match indices.iter().find(|&&i| i >= self.n_agents()) {
            Some(i) => Err(Error::arg(format!(
                "agent index {i} out of range for {} agents",
                self.n_agents()
            ))),
            None => Ok(()),
        }
    }

    /// Concatenates the substates of `indices`, in the order given.
    pub fn project(&self, indices: &[usize]) -> Result<Vec<f64>> {
        self.check(indices)?;
        let mut out = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            out.extend_from_slice(self.agent(i));
        }
        Ok(out)
    }

    /// Writes a neighborhood slice back into the joint vector; the inverse of [`project`](Self::project).
    pub fn scatter(&mut self, indices: &[usize], slice: &[f64]) -> Result<()> {
        self.check(indices)?;
        if slice.len() != indices.len() * self.dim {
            return Err(Error::arg(format!(
                "slice of length {} does not cover {} agents of dimension {}",
                slice.len(),
                indices.len(),
                self.dim
            )));
        }
        for (k, &i) in indices.iter().enumerate() {
            let dim = self.dim;
            self.agent_mut(i)
                .copy_from_slice(&slice[k * dim..(k + 1) * dim]);
        }
        Ok(())
    }
}

/// Axis-aligned box `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ActionBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::arg("box bounds must be non-empty and of equal length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::arg("box lower bound exceeds upper bound"));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    /// The unit box `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self::uniform(dim, 0.0, 1.0).expect("unit box")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Euclidean projection, which for a box is coordinate-wise clipping.
    pub fn project_in_place(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| if l == u { l } else { rng.random_range(l..=u) })
            .collect()
    }

    /// Cartesian product of boxes, in order.
    pub fn product<'a>(boxes: impl IntoIterator<Item = &'a ActionBox>) -> Result<Self> {
        let (mut lower, mut upper) = (Vec::new(), Vec::new());
        for b in boxes {
            lower.extend_from_slice(&b.lower);
            upper.extend_from_slice(&b.upper);
        }
        Self::new(lower, upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn five_agents() -> JointVec {
        JointVec::new(2, (0..10).map(f64::from).collect()).unwrap()
    }

    #[test]
    fn singleton_projection() {
        assert_eq!(five_agents().project(&[3]).unwrap(), vec![6.0, 7.0]);
    }

    #[test]
    fn projection_keeps_given_order() {
        let s = five_agents();
        assert_eq!(
            s.project(&[0, 1, 4]).unwrap(),
            vec![0.0, 1.0, 2.0, 3.0, 8.0, 9.0]
        );
    }

    #[test]
    fn projection_rejects_bad_index() {
        assert!(five_agents().project(&[5]).is_err());
    }

    #[test]
    fn box_clip_and_contains() {
        let b = ActionBox::unit(2);
        let mut x = [-0.5, 1.5];
        b.project_in_place(&mut x);
        assert_eq!(x, [0.0, 1.0]);
        assert!(b.contains(&x));
        assert!(!b.contains(&[0.5]));
        assert_eq!(b.center(), vec![0.5, 0.5]);
    }

    proptest! {
        #[test]
        fn project_scatter_round_trip(
            data in prop::collection::vec(-100.0f64..100.0, 12),
            mask in prop::collection::vec(any::<bool>(), 6),
            junk in prop::collection::vec(-5.0f64..5.0, 12),
        ) {
            let original = JointVec::new(2, data).unwrap();
            let indices: Vec<usize> = (0..6).filter(|&i| mask[i]).collect();
            let slice = original.project(&indices).unwrap();
            // start from a vector that differs only in the projected coordinates
            let mut rebuilt = original.clone();
            let noise: Vec<f64> = junk[..slice.len()].to_vec();
            rebuilt.scatter(&indices, &noise).unwrap();
            rebuilt.scatter(&indices, &slice).unwrap();
            prop_assert_eq!(rebuilt, original);
        }
    }
}
