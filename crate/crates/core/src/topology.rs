//! Undirected communication graphs, neighborhoods and time-varying schedules.
//!
//! Agents are indexed from 0 everywhere in the library. Configuration files and
//! reports use 1-based labels; [`from_label`] and [`to_label`] are the only
//! places where the two meet.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};

/// Converts a 1-based agent label (as used in configs and reports) into an index.
pub fn from_label(label: usize) -> Result<usize> {
    label
        .checked_sub(1)
        .ok_or_else(|| Error::Config("agent labels start at 1".into()))
}

pub fn to_label(index: usize) -> usize {
    index + 1
}

/// An undirected simple graph over `n_agents` agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n_agents: usize,
    // normalized as (min, max)
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds a topology from 0-based edge pairs. Orientation is ignored and
    /// duplicates collapse; self-loops and out-of-range endpoints are rejected.
    pub fn new(n_agents: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n_agents == 0 {
            return Err(Error::arg("a topology needs at least one agent"));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n_agents || b >= n_agents {
                return Err(Error::arg(format!(
                    "edge ({a}, {b}) references an agent outside 0..{n_agents}"
                )));
            }
            if a == b {
                return Err(Error::arg(format!("self-loop on agent {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut adjacency = vec![Vec::new(); n_agents];
        for &(a, b) in &set {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for row in &mut adjacency {
            row.sort_unstable();
        }
        Ok(Self {
            n_agents,
            edges: set,
            adjacency,
        })
    }

    /// Builds a topology from 1-based labels.
    pub fn from_labels(n_agents: usize, edges: &[[usize; 2]]) -> Result<Self> {
        let pairs = edges
            .iter()
            .map(|&[a, b]| Ok((from_label(a)?, from_label(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_agents, pairs)
    }

    pub fn complete(n_agents: usize) -> Result<Self> {
        let edges = (0..n_agents).flat_map(|a| (a + 1..n_agents).map(move |b| (a, b)));
        Self::new(n_agents, edges)
    }

    pub fn path(n_agents: usize) -> Result<Self> {
        Self::new(n_agents, (1..n_agents).map(|b| (b - 1, b)))
    }

    pub fn cycle(n_agents: usize) -> Result<Self> {
        let mut edges: Vec<_> = (1..n_agents).map(|b| (b - 1, b)).collect();
        if n_agents > 2 {
            edges.push((n_agents - 1, 0));
        }
        Self::new(n_agents, edges)
    }

    pub fn star(n_leaves: usize) -> Result<Self> {
        Self::new(n_leaves + 1, (1..=n_leaves).map(|leaf| (0, leaf)))
    }

    /// Five agents, every pair connected except agents 1 and 5.
    pub fn g1() -> Self {
        let edges = (0..5)
            .flat_map(|a| (a + 1..5).map(move |b| (a, b)))
            .filter(|&e| e != (0, 4));
        Self::new(5, edges).expect("static topology")
    }

    /// Five agents on the cycle 1-2-3-4-5-1.
    pub fn g2() -> Self {
        Self::cycle(5).expect("static topology")
    }

    /// Eight agents on the path 1-2-...-8.
    pub fn g3() -> Self {
        Self::path(8).expect("static topology")
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Edge-neighbors of `i`, excluding `i` itself.
    pub fn adjacent(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Closed neighborhood of `i` in ascending index order: its edge-neighbors plus itself.
    pub fn neighborhood(&self, i: usize) -> Result<Vec<usize>> {
        if i >= self.n_agents {
            return Err(Error::arg(format!(
                "agent index {i} out of range for {} agents",
                self.n_agents
            )));
        }
        let mut out = self.adjacency[i].clone();
        let pos = out.partition_point(|&j| j < i);
        out.insert(pos, i);
        Ok(out)
    }

    /// True when `j` is in the closed neighborhood of `i`.
    pub fn in_neighborhood(&self, i: usize, j: usize) -> bool {
        i == j || self.has_edge(i, j)
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n_agents];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Induced subgraph on `members` (given in ascending order); indices of the
    /// result are positions within `members`.
    pub fn induced(&self, members: &[usize]) -> Result<Topology> {
        let mut edges = Vec::new();
        for (p, &a) in members.iter().enumerate() {
            for (q, &b) in members.iter().enumerate().skip(p + 1) {
                if self.has_edge(a, b) {
                    edges.push((p, q));
                }
            }
        }
        Topology::new(members.len(), edges)
    }

    pub fn validate(&self) -> TopologyReport {
        let mut violations = Vec::new();
        for (a, row) in self.adjacency.iter().enumerate() {
            for &b in row {
                if !self.adjacency[b].contains(&a) {
                    violations.push(format!("edge ({a}, {b}) has no reverse"));
                }
                if a == b {
                    violations.push(format!("self-loop on {a}"));
                }
            }
        }
        let connected = self.is_connected();
        if !connected {
            violations.push("graph is disconnected".into());
        }
        TopologyReport {
            n_agents: self.n_agents,
            connected,
            symmetric: violations.iter().all(|v| !v.contains("reverse")),
            degrees: (0..self.n_agents).map(|i| self.degree(i)).collect(),
            violations,
        }
    }
}

/// Pre-flight diagnostics for the optimizer's graph assumptions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopologyReport {
    pub n_agents: usize,
    pub connected: bool,
    pub symmetric: bool,
    pub degrees: Vec<usize>,
    pub violations: Vec<String>,
}

impl TopologyReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Piecewise-constant topology over timesteps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologySchedule {
    entries: Vec<(Topology, usize)>,
    cyclic: bool,
}

impl TopologySchedule {
    pub fn new(entries: Vec<(Topology, usize)>, cyclic: bool) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::arg("a schedule needs at least one topology"))?;
        let n = first.0.n_agents();
        if let Some((t, _)) = entries.iter().find(|(t, _)| t.n_agents() != n) {
            return Err(Error::arg(format!(
                "schedule mixes {n}-agent and {}-agent topologies",
                t.n_agents()
            )));
        }
        if entries.iter().any(|&(_, d)| d == 0) {
            return Err(Error::arg("schedule durations must be positive"));
        }
        Ok(Self { entries, cyclic })
    }

    pub fn fixed(topology: Topology) -> Self {
        Self {
            entries: vec![(topology, 1)],
            cyclic: true,
        }
    }

    /// Alternates between `a` and `b` every `period` timesteps, starting with `a`.
    pub fn switching(a: Topology, b: Topology, period: usize) -> Result<Self> {
        Self::new(vec![(a, period), (b, period)], true)
    }

    pub fn n_agents(&self) -> usize {
        self.entries[0].0.n_agents()
    }

    pub fn entries(&self) -> &[(Topology, usize)] {
        &self.entries
    }

    pub fn is_fixed(&self) -> bool {
        self.entries.len() == 1
    }

    /// Topology active at timestep `t`. Cyclic schedules wrap around; acyclic
    /// ones hold their last entry forever.
    pub fn at(&self, t: usize) -> &Topology {
        let period: usize = self.entries.iter().map(|&(_, d)| d).sum();
        let mut rem = if self.cyclic {
            t % period
        } else {
            t.min(period - 1)
        };
        for (topo, d) in &self.entries {
            if rem < *d {
                return topo;
            }
            rem -= d;
        }
        &self.entries[self.entries.len() - 1].0
    }
}
