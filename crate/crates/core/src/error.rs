use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, NkdcdError>;

#[derive(Debug, Error)]
pub enum NkdcdError {
    #[error("shape mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    Shape {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("bad dimensions: {0}")]
    Dimension(String),

    #[error("backward requires a scalar loss node, got {rows}x{cols}")]
    NonScalarBackward { rows: usize, cols: usize },

    #[error("insufficient history: need {needed} lagged vectors, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("insufficient data: series length {len} must exceed max lag {max_lag}")]
    InsufficientData { len: usize, max_lag: usize },

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("non-finite gradient for {0}")]
    NonFiniteGradient(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration produced a non-finite state at step {step}")]
    Integration { step: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: parse error: {message}")]
    Parse { path: PathBuf, message: String },
}

impl NkdcdError {
    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        NkdcdError::Shape {
            op,
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NkdcdError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        NkdcdError::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Process exit code for the command-line tool: 1 for numerical failures,
    /// 2 for I/O and validation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            NkdcdError::Diverged { .. }
            | NkdcdError::NonFiniteGradient(_)
            | NkdcdError::Integration { .. }
            | NkdcdError::UndefinedMetric(_) => 1,
            _ => 2,
        }
    }
}
