use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the diffusion-map pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument is outside its valid domain.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("index error: {0}")]
    Index(String),

    #[error("cannot allocate {rows}x{cols} matrix ({bytes} bytes required)")]
    Capacity { rows: usize, cols: usize, bytes: u128 },

    #[error("input violates contract: {0}")]
    Contract(String),

    /// The operator or sketch has no usable (positive) spectrum.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("eigensolver did not converge after {iterations} iterations ({converged}/{wanted} pairs converged)")]
    NoConvergence {
        iterations: usize,
        converged: usize,
        wanted: usize,
    },

    #[error("integration diverged at step {step}")]
    Integration { step: usize },

    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// Wraps the error with the name of the pipeline stage that raised it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self.root(),
            Error::Degenerate(_)
                | Error::Numeric(_)
                | Error::NoConvergence { .. }
                | Error::Integration { .. }
                | Error::Capacity { .. }
        )
    }
}
