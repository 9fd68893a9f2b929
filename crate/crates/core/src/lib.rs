//! ℓp-regularized single-layer graph convolutional networks trained by
//! inexact proximal SGD, together with the uniform-stability bounds that
//! govern them and the twin-training harness that measures stability
//! empirically.
//!
//! The modules map onto the pipeline:
//!
//! - [`graph`]: CSR matrices, the four graph filters, spectral radius, `g_e`.
//! - [`model`]: the predictor `σ(g(L) X w)`, losses, gradients, constants.
//! - [`prox`]: the ℓp proximal operator and ball projection.
//! - [`sgd`]: the training loop.
//! - [`bounds`]: closed-form stability and generalization bounds.
//! - [`lab`]: perturbed datasets, twin runs, sweeps, metrics tables.
//! - [`io`]: dataset files, synthetic graphs, experiment configs, plot data.

pub mod bounds;
pub mod error;
pub mod graph;
pub mod io;
pub mod lab;
pub mod model;
pub mod prox;
pub mod sgd;

pub use error::{Error, Result};
pub use graph::{FilterKind, SparseMatrix, SpectralEstimate};
pub use model::{ActivationKind, Dataset, LossKind, Mode, ModelParams};
pub use sgd::TrainConfig;

/// The grid of `p` values used throughout the experiments.
pub const P_GRID: [f64; 6] = [1.001, 1.149, 1.32, 1.516, 1.741, 2.0];
