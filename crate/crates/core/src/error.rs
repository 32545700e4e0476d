use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented domain constraint.
    #[error("invalid input: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The dense eigensolver did not reach its tolerance.
    #[error("eigensolver did not converge for a {dim}x{dim} matrix within {max_iterations} iterations (eps = {eps:e})")]
    NoConvergence {
        dim: usize,
        max_iterations: usize,
        eps: f64,
    },

    /// A reduced-density-matrix eigenvalue was more negative than roundoff allows.
    #[error("negative reduced-density eigenvalue {value:e} in sector nA = {n_a}")]
    NegativeEigenvalue { n_a: usize, value: f64 },

    /// Boltzmann weights vanished or became non-finite.
    #[error("thermal weights underflowed or are not finite (beta = {beta})")]
    ThermalUnderflow { beta: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Whether the failure lies in the caller's input rather than the computation.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::DimensionMismatch { .. } | Error::Parse(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
