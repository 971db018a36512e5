use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    /// Every pixel was masked out or failed to project.
    #[error("empty support: no valid pixels remain for {0}")]
    EmptySupport(&'static str),

    #[error("singularity: {0}")]
    Singular(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("linear solver failed after {iterations} iterations (residual {residual:.3e}, {constraints} constraints): {reason}")]
    SolverFailure {
        reason: String,
        iterations: usize,
        residual: f64,
        constraints: usize,
    },

    #[error("optimizer failed: {0}")]
    OptimizerFailure(String),

    #[error("refinement iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by data that leaves nothing to measure.
    pub fn is_degenerate_data(&self) -> bool {
        match self {
            Error::EmptySupport(_) | Error::Degenerate(_) | Error::Singular(_) => true,
            Error::SolverFailure { .. } => true,
            Error::Iteration { source, .. } => source.is_degenerate_data(),
            _ => false,
        }
    }
}
