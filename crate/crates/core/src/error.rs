use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument {value} outside the domain of {what}")]
    OutOfDomain { what: &'static str, value: f64 },

    #[error("path too short: {len} points, need at least {min}")]
    PathTooShort { len: usize, min: usize },

    #[error("path contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("grid is not uniform at row {row}: step {found} differs from {expected}")]
    NonUniformGrid { row: usize, found: f64, expected: f64 },

    #[error("row {row}: could not parse `{text}` as a number")]
    Parse { row: usize, text: String },

    #[error("a single-column series needs the grid step to be supplied")]
    MissingStep,

    #[error("exact slice simulation with n = {n} exceeds the cap of {cap}; use a truncated horizon or raise the cap")]
    ResourceGuard { n: usize, cap: usize },

    #[error("{simulator} simulation requires a Poisson seed")]
    UnsupportedSeed { simulator: &'static str },

    #[error("window N = {window} is empty for start index {start} (n = {n})")]
    EmptyWindow { window: usize, start: usize, n: usize },

    #[error("admissible window exponent interval ({lower}, {upper}) is empty")]
    EmptyKappaInterval { lower: f64, upper: f64 },

    #[error("window exponent {kappa} lies outside the admissible interval ({lower}, {upper})")]
    KappaOutsideInterval { kappa: f64, lower: f64, upper: f64 },

    #[error("quadrature did not converge on [{lower}, {upper}]: error estimate {error:e}")]
    Quadrature { lower: f64, upper: f64, error: f64 },

    #[error("limit covariance diverges: {0}")]
    Divergent(String),

    #[error("denominator of the T-dependence statistic is zero")]
    DegenerateStatistic,

    #[error("too few samples: {len}, need at least {min}")]
    TooFewSamples { len: usize, min: usize },

    #[error("replication {rep} at n = {n}: {source}")]
    Replication {
        n: usize,
        rep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input rather than by a computation
    /// failing at runtime.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidParameter { .. }
            | Error::OutOfDomain { .. }
            | Error::PathTooShort { .. }
            | Error::NonFinite { .. }
            | Error::NonUniformGrid { .. }
            | Error::Parse { .. }
            | Error::MissingStep
            | Error::ResourceGuard { .. }
            | Error::UnsupportedSeed { .. }
            | Error::EmptyWindow { .. }
            | Error::EmptyKappaInterval { .. }
            | Error::KappaOutsideInterval { .. }
            | Error::TooFewSamples { .. }
            | Error::Json(_) => true,
            Error::Replication { source, .. } => source.is_config(),
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Error::Quadrature { .. } | Error::Divergent(_) | Error::DegenerateStatistic => false,
        }
    }
}
