//! Per-timestep run records and their on-disk layout.
//!
//! A run directory holds `records.csv` (`timestep,agent,reward,cumulative,worst_flag`,
//! agents 1-based, one row per agent and timestep), `actions.csv`
//! (`timestep,agent,a1,a2`), `timing.csv` (`timestep,seconds`, the only
//! nondeterministic file) and `meta.json`. The CSV layout is versioned by
//! [`SCHEMA_VERSION`].

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Algorithm;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub timestep: usize,
    pub rewards: Vec<f64>,
    /// `R_t^i = R_{t-1}^i + gamma^t r_t^i`.
    pub cumulative: Vec<f64>,
    /// Executed joint action, flattened agent-major.
    pub action: Vec<f64>,
    pub wall_clock: f64,
}

impl StepRecord {
    /// `(agent, reward)` of the worst agent, lowest index on ties.
    pub fn worst(&self) -> (usize, f64) {
        self.rewards
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (i, r)| if r < b.1 { (i, r) } else { b })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub schema_version: u32,
    pub name: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub n_agents: usize,
    pub horizon: usize,
    pub discount: f64,
    /// Messages read through the locality-checked bus, and rejected reads.
    pub bus_reads: u64,
    pub locality_violations: usize,
    /// Worst-agent cumulative cost reported by the open-loop solver.
    #[serde(default)]
    pub openloop_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RewardRow {
    timestep: usize,
    agent: usize,
    reward: f64,
    cumulative: f64,
    worst_flag: u8,
}

#[derive(Debug, Serialize, Deserialize)]
struct ActionRow {
    timestep: usize,
    agent: usize,
    a1: f64,
    a2: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TimingRow {
    timestep: usize,
    seconds: f64,
}

impl RunRecord {
    pub fn new(meta: RunMeta) -> Self {
        Self {
            meta,
            steps: Vec::new(),
        }
    }

    pub fn push(&mut self, rewards: Vec<f64>, action: Vec<f64>, wall_clock: f64) {
        let t = self.steps.len();
        let scale = self.meta.discount.powi(t as i32);
        let cumulative = match self.steps.last() {
            Some(prev) => prev.cumulative.iter().zip(&rewards).map(|(c, r)| c + scale * r).collect(),
            None => rewards.iter().map(|r| scale * r).collect(),
        };
        self.steps.push(StepRecord {
            timestep: t,
            rewards,
            cumulative,
            action,
            wall_clock,
        });
    }

    /// Cumulative reward of every agent before timestep `t` (zeros at `t = 0`).
    pub fn cumulative_before(&self, t: usize) -> Vec<f64> {
        match t.checked_sub(1).and_then(|p| self.steps.get(p)) {
            Some(s) => s.cumulative.clone(),
            None => vec![0.0; self.meta.n_agents],
        }
    }

    /// Worst instantaneous reward per timestep.
    pub fn worst_rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.worst().1).collect()
    }

    /// `min_i` of the final cumulative rewards.
    pub fn worst_cumulative(&self) -> f64 {
        self.steps
            .last()
            .map_or(0.0, |s| s.cumulative.iter().copied().fold(f64::INFINITY, f64::min))
    }

    pub fn final_worst_reward(&self) -> Option<f64> {
        self.steps.last().map(|s| s.worst().1)
    }

    /// Largest deviation between the stored cumulative column and its
    /// recomputation from the instantaneous column.
    pub fn cumulative_error(&self) -> f64 {
        let mut acc = vec![0.0; self.meta.n_agents];
        let mut err: f64 = 0.0;
        for s in &self.steps {
            let scale = self.meta.discount.powi(s.timestep as i32);
            for ((a, r), c) in acc.iter_mut().zip(&s.rewards).zip(&s.cumulative) {
                *a += scale * r;
                err = err.max((*a - c).abs());
            }
        }
        err
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let open = |name: &str| {
            let path = dir.join(name);
            csv::Writer::from_path(&path).map_err(Error::from)
        };

        let mut w = open("records.csv")?;
        for s in &self.steps {
            let worst = s.worst().0;
            for (i, (&reward, &cumulative)) in s.rewards.iter().zip(&s.cumulative).enumerate() {
                w.serialize(RewardRow {
                    timestep: s.timestep,
                    agent: i + 1,
                    reward,
                    cumulative,
                    worst_flag: u8::from(i == worst),
                })?;
            }
        }
        w.flush().map_err(|e| Error::io(dir.join("records.csv"), e))?;

        let mut w = open("actions.csv")?;
        for s in &self.steps {
            for (i, a) in s.action.chunks_exact(2).enumerate() {
                w.serialize(ActionRow {
                    timestep: s.timestep,
                    agent: i + 1,
                    a1: a[0],
                    a2: a[1],
                })?;
            }
        }
        w.flush().map_err(|e| Error::io(dir.join("actions.csv"), e))?;

        let mut w = open("timing.csv")?;
        for s in &self.steps {
            w.serialize(TimingRow {
                timestep: s.timestep,
                seconds: s.wall_clock,
            })?;
        }
        w.flush().map_err(|e| Error::io(dir.join("timing.csv"), e))?;

        let meta = dir.join("meta.json");
        fs::write(&meta, serde_json::to_string_pretty(&self.meta)? + "\n").map_err(|e| Error::io(&meta, e))
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("meta.json");
        let meta: RunMeta =
            serde_json::from_str(&fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?)?;
        if meta.schema_version != SCHEMA_VERSION {
            return Err(Error::Unsupported(format!(
                "{} uses schema version {}, this build reads {SCHEMA_VERSION}",
                dir.display(),
                meta.schema_version
            )));
        }
        let n = meta.n_agents;
        let mut steps: Vec<StepRecord> = Vec::new();
        for row in csv::Reader::from_path(dir.join("records.csv"))?.deserialize() {
            let row: RewardRow = row?;
            if row.agent == 0 || row.agent > n {
                return Err(Error::arg(format!("agent {} out of range in records.csv", row.agent)));
            }
            if steps.len() <= row.timestep {
                steps.resize_with(row.timestep + 1, || StepRecord {
                    timestep: 0,
                    rewards: vec![f64::NAN; n],
                    cumulative: vec![f64::NAN; n],
                    action: vec![f64::NAN; 2 * n],
                    wall_clock: 0.0,
                });
            }
            let s = &mut steps[row.timestep];
            s.timestep = row.timestep;
            s.rewards[row.agent - 1] = row.reward;
            s.cumulative[row.agent - 1] = row.cumulative;
        }
        let actions = dir.join("actions.csv");
        if actions.exists() {
            for row in csv::Reader::from_path(&actions)?.deserialize() {
                let row: ActionRow = row?;
                if let Some(s) = steps.get_mut(row.timestep) {
                    if (1..=n).contains(&row.agent) {
                        s.action[2 * (row.agent - 1)] = row.a1;
                        s.action[2 * row.agent - 1] = row.a2;
                    }
                }
            }
        }
        let timing = dir.join("timing.csv");
        if timing.exists() {
            for row in csv::Reader::from_path(&timing)?.deserialize() {
                let row: TimingRow = row?;
                if let Some(s) = steps.get_mut(row.timestep) {
                    s.wall_clock = row.seconds;
                }
            }
        }
        if steps.iter().any(|s| s.rewards.iter().any(|r| r.is_nan())) {
            return Err(Error::arg(format!("{} has missing reward rows", dir.display())));
        }
        Ok(Self { meta, steps })
    }
}
