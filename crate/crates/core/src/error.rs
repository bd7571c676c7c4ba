use thiserror::Error;

/// Failures reported by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(&'static str),

    /// Adaptive quadrature stopped before reaching the requested tolerance.
    #[error("quadrature did not converge: requested {requested:e}, achieved {achieved:e}")]
    Quadrature { requested: f64, achieved: f64 },

    /// Vector and matrix shapes do not agree.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// A structural guarantee of the model was violated.
    #[error("internal error: {0}")]
    Internal(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
