use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Variants carry witness points where a shape or continuity test failed so
/// that callers (and the CLI diagnostics) can point at the offending spot.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Error {
    #[error("invalid partition: {reason}")]
    InvalidPartition { reason: String },

    #[error("invalid interval count n = {n}; need n >= 1")]
    InvalidN { n: usize },

    #[error("partitions live on different domains: [{a0}, {b0}] vs [{a1}, {b1}]")]
    DomainMismatch { a0: f64, b0: f64, a1: f64, b1: f64 },

    #[error("invalid exponent p = {p}; need 0 < p <= inf")]
    InvalidP { p: f64 },

    #[error("invalid step bound t = {t}; need t > 0")]
    InvalidT { t: f64 },

    #[error("invalid argument: {reason}")]
    InvalidArgument { reason: String },

    #[error("input is not in C^{required}: derivative of order {order} jumps by {jump:e} at x = {x}")]
    InsufficientSmoothness { required: usize, order: usize, x: f64, jump: f64 },

    #[error("input is not {q}-monotone (witness x = {witness}, value {value:e})")]
    NotInShapeClass { q: usize, witness: f64, value: f64 },

    #[error("function is negative at x = {witness} (value {value:e})")]
    NotNonnegative { witness: f64, value: f64 },

    #[error("input is not convex (witness x = {witness}, value {value:e})")]
    NotConvex { witness: f64, value: f64 },

    #[error("input is not monotone (witness x = {witness}, value {value:e})")]
    NotMonotone { witness: f64, value: f64 },

    #[error("expected {expected} knots, got {got}")]
    BadKnotCount { expected: usize, got: usize },

    #[error("could not certify a glued spline between the two polynomials on [{lo}, {hi}] ({candidates} candidates tried)")]
    GlueFailed { lo: f64, hi: f64, candidates: usize },

    #[error("mesh too coarse near x = {x}: {reason}")]
    MeshTooCoarse { x: f64, reason: String },

    #[error("shape certification failed near x = {witness} after {attempts} attempts (value {value:e})")]
    ShapeCertificationFailed { witness: f64, value: f64, attempts: usize },

    #[error("refined partition is not a {delta}-remesh: interval {worst_j} has ratio {worst_ratio}")]
    NotARemesh { delta: f64, worst_j: usize, worst_ratio: f64 },

    #[error("interpolant violates the requested shape at x = {witness}")]
    ShapeViolated { witness: f64 },

    #[error("i/o error: {message}")]
    Io { message: String },

    #[error("malformed JSON: {message}")]
    Json { message: String },
}

impl Error {
    /// Failures of the numerical construction itself, as opposed to bad input.
    pub fn is_math_failure(&self) -> bool {
        matches!(
            self,
            Error::InsufficientSmoothness { .. }
                | Error::NotInShapeClass { .. }
                | Error::NotNonnegative { .. }
                | Error::NotConvex { .. }
                | Error::NotMonotone { .. }
                | Error::GlueFailed { .. }
                | Error::MeshTooCoarse { .. }
                | Error::ShapeCertificationFailed { .. }
                | Error::NotARemesh { .. }
                | Error::ShapeViolated { .. }
        )
    }

    pub(crate) fn invalid(reason: impl Into<String>) -> Self {
        Error::InvalidArgument { reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io { message: e.to_string() }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json { message: e.to_string() }
    }
}
