//! Trace Lasso regression toolkit.
//!
//! The central object is the penalty `Ω(w) = ‖X·Diag(w)‖_*`: the trace norm
//! (sum of singular values) of the design matrix with columns rescaled by the
//! coefficients. On orthogonal designs it reduces to a weighted ℓ1 norm, on
//! perfectly correlated designs to a weighted ℓ2 norm, and in between it
//! interpolates adaptively, which makes it a drop-in regularizer for least
//! squares under strong column correlations.
//!
//! Modules:
//!
//! * [`linalg`]: dense kernels (symmetric eigendecomposition, SVD, conjugate
//!   gradient, PSD inverse square root, matrix norms).
//! * [`norms`]: the `Ω_P(w) = ‖P·Diag(w)‖_*` penalty family, Gram-form
//!   evaluation, dual-norm bounds, group-Lasso embedding, unit-ball sampling.
//! * [`solver`]: iteratively reweighted least squares for the square loss
//!   plus trace Lasso, λ_max, regularization paths, uniqueness probing.
//! * [`baselines`]: ridge, Lasso, elastic net reference solvers.
//! * [`perturbation`]: second-order expansions of the trace norm and of the
//!   penalty around the uncorrelated (Lasso) case.
//! * [`datagen`]: seeded synthetic data: covariance models, sparse ground
//!   truths, Gaussian responses, estimation error.

pub mod baselines;
pub mod datagen;
pub mod error;
pub mod linalg;
pub mod norms;
pub mod perturbation;
pub mod solver;

pub use error::{Error, Result};

/// Dense column-major matrix of `f64`, the working type of every module.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense vector of `f64`.
pub type Vector = nalgebra::DVector<f64>;
