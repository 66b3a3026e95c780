//! Minimal dense/GRU network substrate with hand-written reverse passes.
//!
//! There is no general computation graph. Each layer records what it needs in
//! a tape during the forward pass and consumes that tape in `backward`. The
//! [`gradcheck`] module provides the central-difference oracle the backward
//! passes are tested against.

mod activation;
mod dense;
pub mod gradcheck;
mod gru;
mod init;
mod matrix;
mod optim;
mod params;

pub use activation::Activation;
pub use dense::{DenseLayer, DenseTape};
pub use gradcheck::{check_gradients, finite_difference_gradients, finite_difference_subset, GradCheckReport};
pub use gru::{GruBlock, GruCell, GruTape};
pub use init::orthogonal_init;
pub use matrix::Matrix;
pub use optim::{clip_grad_norm, OptimizerState};
pub use params::{flatten, load_flat, param_count, zeros_like, Parameters};

/// Errors raised by the network substrate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("backward called without a recorded forward pass")]
    BackwardWithoutForward,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<(), NnError> {
    if expected == actual {
        Ok(())
    } else {
        Err(NnError::Dimension { expected, actual })
    }
}
