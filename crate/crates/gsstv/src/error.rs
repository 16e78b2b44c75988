//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by cube construction, graph building, solver configuration,
/// and cube-file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Vector or cube lengths do not line up.
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A non-finite value (NaN or infinity) was found where finite data is required.
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    /// A cube file failed structural validation.
    #[error("cube format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    /// The step-size pair violates the convergence condition.
    #[error("step sizes violate gamma1*gamma2*lambda1 < 1 (product = {product})")]
    StepSize { product: f64 },

    /// The iteration produced a NaN.
    #[error("numerical failure: NaN detected at iteration {iteration}")]
    NumericalFailure { iteration: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
