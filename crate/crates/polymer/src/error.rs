//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failure modes of the numerical routines.
///
/// Every message names the equation or residual that failed so that callers
/// (and the command-line front end) can report it verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// An iterative solver or quadrature did not reach its tolerance.
    #[error("nonconvergence in {what}: best residual {residual:e}")]
    NonConvergence {
        /// The equation or procedure that failed.
        what: String,
        /// The smallest residual (or error estimate) that was reached.
        residual: f64,
    },
    /// The correlator shape is not covered by the closed-form theory.
    #[error("unsupported correlator: {0}")]
    Unsupported(String),
    /// A condition that should be unreachable was hit.
    #[error("internal error: {0}")]
    Internal(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Returns a [`Error::Domain`] error unless `cond` holds.
pub(crate) fn ensure_domain(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}
