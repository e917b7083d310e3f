//! Drift regression with Gaussian-process predictive means.
//!
//! Every output dimension gets its own GP, but all of them share the kernel
//! and the training inputs, so a single Cholesky factor of the Gram matrix
//! serves all `d` weight columns. Hyperparameters are fixed; only the
//! predictive mean is computed.

mod kernel;
mod model;

pub use kernel::{Kernel, KernelFamily};
pub use model::{fit, GPDriftModel, Subsample};
