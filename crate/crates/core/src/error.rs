use thiserror::Error;

/// Errors raised anywhere in the detection stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A^H| = {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is not one (|Tr - 1| = {deviation:e})")]
    TraceNotOne { deviation: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("tensor dimension {dim} exceeds cap {cap}")]
    DimensionCapExceeded { dim: u128, cap: usize },

    #[error("outcome labels do not line up")]
    LabelMismatch,

    #[error("density operator is rank deficient (smallest eigenvalue {min_eigenvalue:e})")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("probabilities do not normalize (sum = {sum}, min entry = {min_entry:e})")]
    NormalizationFailure { sum: f64, min_entry: f64 },

    #[error("unknown outcome {0}")]
    UnknownOutcome(String),

    #[error("estimator window not full ({filled} of {window} samples)")]
    NotWarmedUp { filled: usize, window: usize },

    #[error("threshold calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("degenerate scenario: {0}")]
    DegenerateScenario(String),

    #[error("post-change state has support outside the pre-change support")]
    InfiniteDivergence,

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by bad inputs rather than by a numerical
    /// procedure failing on valid inputs.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NormalizationFailure { .. }
                | Error::CalibrationFailed(_)
                | Error::NoConvergence { .. }
                | Error::DegenerateScenario(_)
                | Error::InfiniteDivergence
        )
    }
}

impl Error {
    /// Variant name, for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonHermitian { .. } => "NonHermitian",
            Error::NotPsd { .. } => "NotPsd",
            Error::TraceNotOne { .. } => "TraceNotOne",
            Error::NotSquare { .. } => "NotSquare",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::DimensionCapExceeded { .. } => "DimensionCapExceeded",
            Error::LabelMismatch => "LabelMismatch",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::NormalizationFailure { .. } => "NormalizationFailure",
            Error::UnknownOutcome(_) => "UnknownOutcome",
            Error::NotWarmedUp { .. } => "NotWarmedUp",
            Error::CalibrationFailed(_) => "CalibrationFailed",
            Error::DegenerateScenario(_) => "DegenerateScenario",
            Error::InfiniteDivergence => "InfiniteDivergence",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Parse(_) => "Parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
