use thiserror::Error;

/// Errors raised by the library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("spectral radius {0:e} is too small to rescale")]
    ZeroSpectralRadius(f64),

    #[error(
        "kernel matrix has only {available} eigenvalues above threshold, {requested} requested"
    )]
    InsufficientPositiveEigenvalues { requested: usize, available: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("solver did not converge after {iterations} iterations (KKT violation {violation:e})")]
    SolverNotConverged { iterations: usize, violation: f64 },

    #[error("target sequence has zero variance")]
    ZeroVarianceTarget,

    #[error("autocorrelation has no zero crossing within {max_lag} lags")]
    NoZeroCrossing { max_lag: usize },

    #[error("segment `{segment}` too short: {len} samples, need more than {min}")]
    SegmentTooShort {
        segment: &'static str,
        len: usize,
        min: usize,
    },

    #[error("series of length {len} too short for embedding with m={m}, tau={tau}")]
    SeriesTooShort { len: usize, m: usize, tau: usize },

    #[error("false nearest neighbours fraction never fell below threshold up to m={m_max}")]
    NoConvergence { m_max: usize },

    #[error("not enough point pairs outside the Theiler window")]
    InsufficientPairs,

    #[error("no scaling region found in correlation sum")]
    NoScalingRegion,

    #[error("no admissible nearest neighbours outside the Theiler window")]
    NoNeighbors,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ZeroSpectralRadius(_) => "ZeroSpectralRadius",
            Error::InsufficientPositiveEigenvalues { .. } => "InsufficientPositiveEigenvalues",
            Error::NonFinite(_) => "NonFinite",
            Error::SolverNotConverged { .. } => "SolverNotConverged",
            Error::ZeroVarianceTarget => "ZeroVarianceTarget",
            Error::NoZeroCrossing { .. } => "NoZeroCrossing",
            Error::SegmentTooShort { .. } => "SegmentTooShort",
            Error::SeriesTooShort { .. } => "SeriesTooShort",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::InsufficientPairs => "InsufficientPairs",
            Error::NoScalingRegion => "NoScalingRegion",
            Error::NoNeighbors => "NoNeighbors",
            Error::Config(_) => "Config",
            Error::Io(_) => "Io",
            Error::Parse(_) => "Parse",
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
