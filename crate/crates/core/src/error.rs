use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}:{column}: {message}")]
    ConfigFile {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("model sampling failed: {0}")]
    Model(String),

    #[error("planner failed at depth {depth} (query {query}): {source}")]
    Planner {
        query: usize,
        depth: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("optimizer failed for agent {agent} at round {round}: {source}")]
    Optimizer {
        agent: usize,
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("locality violation: agent {reader} read from non-neighbor {sender} at round {round}")]
    Locality {
        reader: usize,
        sender: usize,
        round: usize,
    },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("enumeration refused: {count} joint plans exceed the guard of {limit}")]
    SizeGuard { count: u128, limit: u128 },

    #[error("run aborted at timestep {timestep}: {source}")]
    Run {
        timestep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("plot error: {0}")]
    Plot(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user configuration rather than runtime failures.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::ConfigFile { .. })
    }
}
