// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = GuiderError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GuiderError {
    /// A parameter set or config file violates a range invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// Inputs are inconsistent (dimension mismatch, empty data, bad ordering).
    #[error("input error: {0}")]
    Input(String),

    /// A geometric fit has no unique solution (collinear points, empty hull).
    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("projection error: point at depth {0} is not in front of the camera")]
    Projection(f64),

    #[error("derivative estimation needs at least 3 samples, got {0}")]
    TooFewSamples(usize),

    /// A file parsed but did not match its schema.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GuiderError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GuiderError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        GuiderError::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// True for errors caused by malformed inputs rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, GuiderError::Io { .. })
    }
}

pub(crate) fn ensure_positive(group: &str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(GuiderError::Config(format!("{group}.{name} must be > 0, got {v}")))
    }
}
