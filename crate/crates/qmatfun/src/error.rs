//! Error types shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while evaluating a q-special function or a
/// q-difference residual. Variants are deliberately coarse: callers branch on
/// the kind, messages carry the detail.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A truncated series, product or Jackson sum hit its term cap before the
    /// requested tolerance was met.
    #[error("truncation did not converge within {max_terms} terms (tail estimate {tail:.3e})")]
    TruncationNotConverged { max_terms: usize, tail: f64 },

    /// A factor of an infinite product vanished (the reciprocal has a pole).
    #[error("pole encountered: product factor vanishes at index {index}")]
    PoleEncountered { index: usize },

    /// A q-difference quotient was requested at a point where its denominator
    /// vanishes.
    #[error("division by zero: {0}")]
    DivisionByZero(String),

    /// A principal logarithm or power was requested for an argument on the
    /// closed negative real axis.
    #[error("branch cut violation: {0}")]
    BranchCutViolation(String),

    /// A dense linear solve or inversion met a numerically singular matrix.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// Factor k of a q-shifted factorial is not invertible.
    #[error("singular factor at k = {k}")]
    SingularFactor { k: usize },

    /// The eigenvalue iteration did not converge.
    #[error("eigensolver failed to converge")]
    EigenFailure,

    /// An operation that requires commuting matrix arguments received a
    /// non-commuting pair.
    #[error("matrices do not commute: {0}")]
    NotCommuting(String),

    /// A matrix argument that must be positive stable is not.
    #[error("matrix is not positive stable: {0}")]
    NotPositiveStable(String),

    /// A q-gamma value that must be inverted is numerically singular.
    #[error("singular q-gamma value: {0}")]
    SingularGamma(String),

    /// A parameter violates a construction invariant (|q| >= 1, bad
    /// tolerance, oversized dimension, non-finite entries, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Matrix dimensions disagree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

impl Error {
    /// Stable machine-readable tag for report files and exit-code mapping.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::TruncationNotConverged { .. } => "TruncationNotConverged",
            Error::PoleEncountered { .. } => "PoleEncountered",
            Error::DivisionByZero(_) => "DivisionByZero",
            Error::BranchCutViolation(_) => "BranchCutViolation",
            Error::SingularMatrix(_) => "SingularMatrix",
            Error::SingularFactor { .. } => "SingularFactor",
            Error::EigenFailure => "EigenFailure",
            Error::NotCommuting(_) => "NotCommuting",
            Error::NotPositiveStable(_) => "NotPositiveStable",
            Error::SingularGamma(_) => "SingularGamma",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::DimensionMismatch(_) => "DimensionMismatch",
        }
    }
}
