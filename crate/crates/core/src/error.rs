use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Variants are grouped by the exit code the CLI maps them to: configuration
/// and usage problems, data problems, and numeric failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} (index {index}, value {value})")]
    Domain {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("integration failed at step {step} (t = {time}): non-finite state")]
    Integration { step: usize, time: f64 },

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },

    #[error("checkpoint incompatible: field `{field}` {reason}")]
    Checkpoint { field: String, reason: String },

    #[error("evaluation failed at query point s = {re} + {im}i: {reason}")]
    Evaluation { re: f64, im: f64, reason: String },

    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes, used by the CLI to choose an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn shape(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config { .. } => ErrorClass::Usage,
            Error::Parse { .. } | Error::Io { .. } | Error::Json(_) | Error::Checkpoint { .. } => {
                ErrorClass::Data
            }
            Error::Stage { source, .. } => source.class(),
            Error::Domain { .. }
            | Error::Shape { .. }
            | Error::Integration { .. }
            | Error::Divergence { .. }
            | Error::Evaluation { .. } => ErrorClass::Numeric,
        }
    }
}

/// Attaches a stage label to the error side of a result.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
