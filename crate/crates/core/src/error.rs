use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the ensemble, spectral and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity error: dimension {dim} exceeds the configured cap {cap}")]
    Capacity { dim: u64, cap: u64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("degenerate spectrum: zero variance")]
    DegenerateSpectrum,

    #[error("singular least-squares fit at order {order}")]
    SingularFit { order: usize },

    #[error("unfolding error: smooth distribution not increasing between levels {lo} and {hi}")]
    Unfolding { lo: usize, hi: usize },

    #[error("degenerate series: zero variance")]
    DegenerateSeries,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("archive format error: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by invalid user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Capacity { .. } | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
