use std::path::PathBuf;

use crate::algebra::MomentIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid core specification: {0}")]
    InvalidSpec(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integration domain is empty")]
    EmptyDomain,

    #[error("image is {width}x{height}, need at least {min}x{min}")]
    TooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("moment table is missing index {0}")]
    MissingIndex(MomentIndex),

    #[error("brute-force summation would visit {tuples} point tuples (limit {limit})")]
    TooLarge { tuples: f64, limit: f64 },

    #[error("invariant is degenerate: quadratic color core below threshold")]
    Degenerate,

    #[error("transform matrix is singular (|det| = {0:e})")]
    Singular(f64),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("image format error: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
