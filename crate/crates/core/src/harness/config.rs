//! TOML experiment configuration with line-precise validation errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formation::{FormationEnv, FormationSpec, PairMode, RolloutConfig};
use crate::maxaffine::FitConfig;
use crate::minmax::OptimizerConfig;
use crate::oracles::OpenLoopConfig;
use crate::planner::PlannerConfig;
use crate::space::JointState;
use crate::topology::{Topology, TopologySchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Proposed,
    RolloutBaseline,
    PomcpowBaseline,
    Optimal,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Proposed,
        Algorithm::PomcpowBaseline,
        Algorithm::RolloutBaseline,
        Algorithm::Optimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::RolloutBaseline => "rollout_baseline",
            Algorithm::PomcpowBaseline => "pomcpow_baseline",
            Algorithm::Optimal => "optimal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown algorithm {s:?}; expected one of proposed, rollout_baseline, pomcpow_baseline, optimal"
                ))
            })
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_discount")]
    pub discount: f64,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Use T = 150, L = 100, K = 1000 instead of the configured sizes.
    #[serde(default)]
    pub full_scale: bool,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Proposed
}

fn default_horizon() -> usize {
    30
}

fn default_discount() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    G1,
    G2,
    G3,
}

impl Preset {
    pub fn topology(self) -> Topology {
        match self {
            Preset::G1 => Topology::g1(),
            Preset::G2 => Topology::g2(),
            Preset::G3 => Topology::g3(),
        }
    }
}

/// One graph given by preset, inline 1-based edges, or a TOML file holding
/// `n_agents` and `edges`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub preset: Option<Preset>,
    pub n_agents: Option<usize>,
    pub edges: Option<Vec<[usize; 2]>>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub preset: Option<Preset>,
    pub n_agents: Option<usize>,
    pub edges: Option<Vec<[usize; 2]>>,
    pub file: Option<PathBuf>,
    pub steps: usize,
}

impl PhaseSpec {
    fn graph(&self) -> GraphSpec {
        GraphSpec {
            preset: self.preset,
            n_agents: self.n_agents,
            edges: self.edges.clone(),
            file: self.file.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    /// Preset name, or `switching` for G1 and G2 alternating every `period` steps.
    pub preset: Option<String>,
    pub period: Option<usize>,
    pub n_agents: Option<usize>,
    pub edges: Option<Vec<[usize; 2]>>,
    pub file: Option<PathBuf>,
    /// Explicit phases, repeated cyclically.
    pub schedule: Option<Vec<PhaseSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationSection {
    pub desired: Option<Vec<[f64; 2]>>,
    /// Regular polygon of this circumradius when `desired` is absent.
    pub polygon_radius: Option<f64>,
    pub initial: Vec<[f64; 2]>,
    #[serde(default)]
    pub pair_mode: PairMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub topology: TopologySection,
    pub formation: FormationSection,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub rollout: RolloutConfig,
    #[serde(default)]
    pub openloop: OpenLoopConfig,
    /// Directory relative file references are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Fully resolved experiment inputs.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub schedule: TopologySchedule,
    pub env: FormationEnv,
    pub initial: JointState,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

/// Position of the first `key =` (or `[key]`) occurrence, for errors found
/// after deserialization.
fn locate(src: &str, key: &str) -> (usize, usize) {
    for (n, line) in src.lines().enumerate() {
        let t = line.trim_start();
        let is_key = t.strip_prefix(key).is_some_and(|rest| {
            let rest = rest.trim_start();
            rest.starts_with('=')
        });
        if is_key || t.starts_with(&format!("[{key}]")) {
            return (n + 1, line.len() - t.len() + 1);
        }
    }
    (1, 1)
}

impl ExperimentConfig {
    pub fn from_toml(src: &str, path: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(src).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_col(src, s.start));
            Error::ConfigFile {
                path: path.to_path_buf(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if cfg.experiment.full_scale {
            cfg.experiment.horizon = 150;
            cfg.planner.n_queries = 100;
            cfg.optimizer.n_iters = 1000;
        }
        cfg.check().map_err(|(key, message)| {
            let (line, column) = locate(src, key);
            Error::ConfigFile {
                path: path.to_path_buf(),
                line,
                column,
                message,
            }
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        // an unreadable config is the user's input problem, not a runtime failure
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&src, path)
    }

    /// Semantic checks; the error names the offending key.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let e = &self.experiment;
        if e.horizon == 0 {
            return Err(("horizon", "experiment.horizon must be positive".into()));
        }
        if !(e.discount > 0.0 && e.discount <= 1.0) {
            return Err(("discount", format!("discount must lie in (0, 1], got {}", e.discount)));
        }
        let first = |r: Result<()>, key| r.map_err(|err| (key, err.to_string()));
        first(self.planner.validate(), "planner")?;
        first(self.fit.validate(), "fit")?;
        first(self.optimizer.validate(), "optimizer")?;
        first(self.rollout.validate(), "rollout")?;
        first(self.openloop.validate(), "openloop")?;
        let schedule = self.schedule().map_err(|err| ("topology", err.to_string()))?;
        let n = schedule.n_agents();
        if self.formation.initial.len() != n {
            return Err((
                "initial",
                format!("{} initial positions for {n} agents", self.formation.initial.len()),
            ));
        }
        let spec = self.formation_spec().map_err(|err| ("formation", err.to_string()))?;
        if spec.n_agents() != n {
            return Err((
                "desired",
                format!("formation has {} agents but the topology has {n}", spec.n_agents()),
            ));
        }
        for (topo, _) in schedule.entries() {
            first(self.rollout.check_stable(topo.max_degree()), "euler_dt")?;
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn graph(&self, g: &GraphSpec) -> Result<Topology> {
        match (g.preset, &g.edges, &g.file) {
            (Some(p), None, None) => Ok(p.topology()),
            (None, Some(edges), None) => {
                let n = g
                    .n_agents
                    .ok_or_else(|| Error::Config("inline edges need n_agents".into()))?;
                Topology::from_labels(n, edges)
            }
            (None, None, Some(file)) => {
                let path = self.resolve(file);
                let src = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                let inner: GraphSpec = toml::from_str(&src).map_err(|e| {
                    let (line, column) = e.span().map_or((1, 1), |s| line_col(&src, s.start));
                    Error::ConfigFile {
                        path: path.clone(),
                        line,
                        column,
                        message: e.message().to_string(),
                    }
                })?;
                if inner.file.is_some() {
                    return Err(Error::Config("graph files cannot reference other files".into()));
                }
                self.graph(&inner)
            }
            _ => Err(Error::Config(
                "a graph needs exactly one of preset, edges or file".into(),
            )),
        }
    }

    pub fn schedule(&self) -> Result<TopologySchedule> {
        let t = &self.topology;
        let schedule = if let Some(phases) = &t.schedule {
            if t.preset.is_some() || t.edges.is_some() || t.file.is_some() {
                return Err(Error::Config("topology.schedule excludes preset, edges and file".into()));
            }
            let entries = phases
                .iter()
                .map(|p| Ok((self.graph(&p.graph())?, p.steps)))
                .collect::<Result<Vec<_>>>()?;
            TopologySchedule::new(entries, true)?
        } else if t.preset.as_deref() == Some("switching") {
            let period = t.period.unwrap_or(10);
            TopologySchedule::switching(Topology::g1(), Topology::g2(), period)?
        } else {
            let preset = match t.preset.as_deref() {
                None => None,
                Some("G1") => Some(Preset::G1),
                Some("G2") => Some(Preset::G2),
                Some("G3") => Some(Preset::G3),
                Some(other) => {
                    return Err(Error::Config(format!(
                        "unknown topology preset {other:?}; expected G1, G2, G3 or switching"
                    )))
                }
            };
            let g = GraphSpec {
                preset,
                n_agents: t.n_agents,
                edges: t.edges.clone(),
                file: t.file.clone(),
            };
            TopologySchedule::fixed(self.graph(&g)?)
        };
        for (topo, _) in schedule.entries() {
            if !topo.is_connected() {
                eprintln!("warning: topology {:?} is disconnected", topo.edges().collect::<Vec<_>>());
            }
        }
        Ok(schedule)
    }

    pub fn formation_spec(&self) -> Result<FormationSpec> {
        match (&self.formation.desired, self.formation.polygon_radius) {
            (Some(d), None) => FormationSpec::new(d.clone()),
            (None, Some(r)) if r > 0.0 => Ok(FormationSpec::regular_polygon(self.formation.initial.len(), r)),
            _ => Err(Error::Config(
                "formation needs either desired positions or a positive polygon_radius".into(),
            )),
        }
    }

    pub fn resolve_experiment(&self) -> Result<Experiment> {
        let schedule = self.schedule()?;
        let env = FormationEnv::new(self.formation_spec()?, self.formation.pair_mode);
        let initial = JointState::from_agents(
            &self.formation.initial.iter().map(|p| p.to_vec()).collect::<Vec<_>>(),
        )?;
        Ok(Experiment {
            config: self.clone(),
            schedule,
            env,
            initial,
        })
    }
}
