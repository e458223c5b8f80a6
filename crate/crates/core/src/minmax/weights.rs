use crate::error::{Error, Result};
use crate::topology::Topology;

/// Metropolis weight row of agent `i` as `(neighbor, weight)` pairs in
/// ascending neighbor order, self included:
/// `w_ij = 1 / (1 + max(deg_i, deg_j))` for edge-neighbors and
/// `w_ii = 1 - sum_j w_ij`.
pub fn metropolis_weights(topology: &Topology, i: usize) -> Result<Vec<(usize, f64)>> {
    let members = topology.neighborhood(i)?;
    let di = topology.degree(i);
    let off: f64 = topology
        .adjacent(i)
        .iter()
        .map(|&j| 1.0 / (1 + di.max(topology.degree(j))) as f64)
        .sum();
    Ok(members
        .into_iter()
        .map(|j| {
            let w = if j == i {
                1.0 - off
            } else {
                1.0 / (1 + di.max(topology.degree(j))) as f64
            };
            (j, w)
        })
        .collect())
}

/// Per-agent weight rows for one topology.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusWeights {
    rows: Vec<Vec<(usize, f64)>>,
}

pub fn metropolis(topology: &Topology) -> ConsensusWeights {
    ConsensusWeights {
        rows: (0..topology.n_agents())
            .map(|i| metropolis_weights(topology, i).expect("index in range"))
            .collect(),
    }
}

impl ConsensusWeights {
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.rows.len();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[i][j] = w;
            }
        }
        m
    }

    /// Checks nonnegativity, support on closed neighborhoods and row sums.
    pub fn validate(&self, topology: &Topology, tol: f64) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if let Some(&(j, w)) = row.iter().find(|&&(j, w)| w < 0.0 || (w > 0.0 && !topology.in_neighborhood(i, j))) {
                return Err(Error::Config(format!("weight w[{i}][{j}] = {w} is invalid")));
            }
            let sum: f64 = row.iter().map(|&(_, w)| w).sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::Config(format!("weight row {i} sums to {sum}")));
            }
        }
        Ok(())
    }
}
