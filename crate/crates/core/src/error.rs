use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum MagError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("node index {index} out of bounds for a graph with {n} nodes")]
    Bounds { index: usize, n: usize },

    #[error("invalid graph: {0}")]
    Validation(String),

    #[error("insufficient capacity: {0}")]
    Capacity(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("node {0} has zero degree; diffusion requires every node to have a neighbour")]
    DegenerateDegree(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("undefined: {0}")]
    Undefined(String),
}

impl MagError {
    /// Stable short identifier, used for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            MagError::Io { .. } => "io",
            MagError::Parse { .. } => "parse",
            MagError::Bounds { .. } => "bounds",
            MagError::Validation(_) => "validation",
            MagError::Capacity(_) => "capacity",
            MagError::Dimension(_) => "dimension",
            MagError::DegenerateDegree(_) => "degenerate_degree",
            MagError::Numerical(_) => "numerical",
            MagError::Config(_) => "config",
            MagError::Sampling(_) => "sampling",
            MagError::Checkpoint(_) => "checkpoint",
            MagError::Undefined(_) => "undefined",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MagError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, MagError>;
