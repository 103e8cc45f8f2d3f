//! Low-rank tensor completion by minimizing the tensor truncated nuclear norm.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`] – the dense [`Tensor3`] container, unfold/fold, block-circulant
//!   form, norms and traces;
//! * [`fourier`] – transforms along the tube dimension;
//! * [`tsvd`] – t-product, t-SVD, tubal rank, nuclear norms and thresholding;
//! * [`completion`] – masks, synthetic data and PSNR;
//! * [`solvers`] – the outer truncation loop with ADMM and APGL inner solvers.

pub mod completion;
pub mod error;
pub mod fourier;
pub mod solvers;
pub mod tensor;
pub mod tsvd;

pub use completion::{CompletionProblem, ObservationMask};
pub use error::{Error, Result};
pub use fourier::FourierTensor;
pub use solvers::{Method, SolveReport, SolverConfig, StopRule};
pub use tensor::{MatrixBlock, Tensor3};
pub use tsvd::{TSvdFactors, TruncationPair};
