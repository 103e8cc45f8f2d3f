use thiserror::Error;

/// Errors raised by the tensor algebra and the completion solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index out of range: {0}")]
    Range(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("allocation too large: {0}")]
    Resource(String),

    /// The inverse transform produced an imaginary residue above tolerance,
    /// meaning the frequency-domain input was not conjugate-symmetric.
    #[error("imaginary residue {residue:e} exceeds tolerance {tolerance:e}")]
    NumericalConsistency { residue: f64, tolerance: f64 },

    #[error("SVD did not converge on frequency slice {slice}")]
    SvdFailure { slice: usize },

    #[error("outer iteration {outer}: {source}")]
    Solver {
        outer: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
