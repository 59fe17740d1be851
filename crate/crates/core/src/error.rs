use thiserror::Error;

/// Errors raised by the numerical and statistical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {function}: {reason}")]
    Domain {
        function: &'static str,
        reason: String,
    },

    /// The requested quantity is infinite for these inputs.
    #[error("divergent quantity in {function}: {reason}")]
    Divergence {
        function: &'static str,
        reason: String,
    },

    /// Adaptive quadrature exhausted its budget before meeting tolerance.
    #[error("quadrature did not converge in {function}: value {value:e}, error estimate {error_estimate:e}")]
    Quadrature {
        function: &'static str,
        value: f64,
        error_estimate: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A configuration object violates its invariants.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// A truncated series could not reach the requested tail tolerance.
    #[error("series truncation failed in {function}: tail bound {tail_bound:e} above {tolerance:e}")]
    Truncation {
        function: &'static str,
        tail_bound: f64,
        tolerance: f64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(function: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        function,
        reason: reason.into(),
    }
}
