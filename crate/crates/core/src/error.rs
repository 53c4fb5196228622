use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },

    #[error("empty series")]
    EmptySeries,

    #[error("row {row} has {found} columns, expected {expected}")]
    InconsistentArity {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid block scheme: {0}")]
    InvalidScheme(String),

    #[error("functional `{functional}` requires univariate data, got dimension {dim}")]
    Dimension { functional: String, dim: usize },

    #[error("scale must be positive and finite, got {0}")]
    Scale(f64),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate threshold: {0}")]
    DegenerateThreshold(String),

    #[error("no anchor exceedances in the admissible range")]
    NoAnchors,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("functional `{0}` is not supported by this oracle route")]
    Unsupported(String),

    #[error("insufficient sample: {found} exceedances, need at least {required}")]
    InsufficientSample { found: usize, required: usize },

    #[error("pathological model: acceptance rate {rate:.3e} after {draws} draws")]
    Pathological { rate: f64, draws: u64 },

    #[error("too many degenerate replications: {degenerate} of {total}")]
    TooManyDegenerate { degenerate: usize, total: usize },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
