//! Seeded synthetic data: covariance models, sparse ground truths, Gaussian
//! designs and responses, and the estimation-error metric.
//!
//! Everything is a pure function of its inputs and a `u64` seed. Randomness
//! comes from ChaCha12 streams keyed by `(seed, tag)`, see [`stream_rng`],
//! so distinct quantities (design, ground truth, noise, ...) never share a
//! stream and results are reproducible across platforms for pinned
//! dependency versions.

use crate::error::{Error, Result};
use crate::linalg;
use crate::{Matrix, Vector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Covariance structure of the sampled covariates.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceKind {
    /// Uncorrelated covariates, `Σ = I`.
    Identity,
    /// Block-diagonal with each block equal to `base·I + within·11^T`
    /// (e.g. `0.2·I + 0.8·11^T` for clusters of strongly correlated
    /// variables). `base + within` must equal 1 so the diagonal is unit.
    BlockDiagonal {
        block_size: usize,
        within: f64,
        base: f64,
    },
    /// Sequential correlation, `Σ_ij = rho^|i−j|`.
    Toeplitz { rho: f64 },
}

/// Declarative description of a `p × p` covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpec {
    pub kind: CovarianceKind,
    pub p: usize,
}

impl CovarianceSpec {
    pub fn identity(p: usize) -> Self {
        Self {
            kind: CovarianceKind::Identity,
            p,
        }
    }

    pub fn block_diagonal(p: usize, block_size: usize, within: f64, base: f64) -> Self {
        Self {
            kind: CovarianceKind::BlockDiagonal {
                block_size,
                within,
                base,
            },
            p,
        }
    }

    pub fn toeplitz(p: usize, rho: f64) -> Self {
        Self {
            kind: CovarianceKind::Toeplitz { rho },
            p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::invalid("covariance dimension must be >= 1"));
        }
        match self.kind {
            CovarianceKind::Identity => Ok(()),
            CovarianceKind::BlockDiagonal {
                block_size,
                within,
                base,
            } => {
                if block_size == 0 || self.p % block_size != 0 {
                    return Err(Error::invalid(format!(
                        "block size {block_size} must divide p = {}",
                        self.p
                    )));
                }
                if (base + within - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(
                        "block covariance needs base + within = 1 for a unit diagonal",
                    ));
                }
                if base < 0.0 || base + block_size as f64 * within < 0.0 {
                    return Err(Error::invalid("block covariance is not PSD"));
                }
                Ok(())
            }
            CovarianceKind::Toeplitz { rho } => {
                if rho.abs() < 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid("toeplitz correlation must satisfy |rho| < 1"))
                }
            }
        }
    }
}

/// Sparse ground-truth coefficients: support `{0, …, k−1}` with entries
/// `2·(b − 1/2)`, `b` uniform on `(0, 1)`, zero elsewhere.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub support_size: usize,
    pub w_star: Vector,
    pub seed: u64,
}

/// A deterministic ChaCha12 stream for `(seed, tag)`. The 32-byte key is the
/// little-endian seed in bytes 0..8 and the ASCII tag in bytes 8..32.
pub fn stream_rng(seed: u64, tag: &str) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    for (slot, byte) in key[8..].iter_mut().zip(tag.as_bytes()) {
        *slot = *byte;
    }
    ChaCha12Rng::from_seed(key)
}

/// Builds the covariance matrix described by `spec`.
pub fn build_sigma(spec: &CovarianceSpec) -> Result<Matrix> {
    spec.validate()?;
    let p = spec.p;
    let sigma = match spec.kind {
        CovarianceKind::Identity => Matrix::identity(p, p),
        CovarianceKind::BlockDiagonal {
            block_size,
            within,
            base,
        } => Matrix::from_fn(p, p, |i, j| {
            if i == j {
                base + within
            } else if i / block_size == j / block_size {
                within
            } else {
                0.0
            }
        }),
        CovarianceKind::Toeplitz { rho } => Matrix::from_fn(p, p, |i, j| {
            rho.powi((i as i64 - j as i64).unsigned_abs() as i32)
        }),
    };
    Ok(sigma)
}

/// Draws `n` i.i.d. rows from `N(0, Σ)` via the Cholesky factor of Σ.
pub fn sample_design(n: usize, spec: &CovarianceSpec, seed: u64) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::invalid("need at least one observation"));
    }
    let sigma = build_sigma(spec)?;
    let p = spec.p;
    let mut rng = stream_rng(seed, "design");
    let z = Matrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
    if matches!(spec.kind, CovarianceKind::Identity) {
        return Ok(z);
    }
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::invalid("covariance matrix is not positive definite"))?;
    Ok(&z * chol.l().transpose())
}

/// Ground-truth coefficients with support exactly `{0, …, k−1}`.
pub fn sample_ground_truth(p: usize, k: usize, seed: u64) -> Result<GroundTruth> {
    if k == 0 || k > p {
        return Err(Error::invalid(format!(
            "support size k = {k} must satisfy 1 <= k <= p = {p}"
        )));
    }
    let mut rng = stream_rng(seed, "truth");
    let mut w_star = Vector::zeros(p);
    for i in 0..k {
        let mut b: f64 = rng.random();
        while b == 0.0 {
            b = rng.random();
        }
        w_star[i] = 2.0 * (b - 0.5);
    }
    Ok(GroundTruth {
        support_size: k,
        w_star,
        seed,
    })
}

/// Response `y = X·w* + ε` with `ε ~ N(0, σ²)`; `sigma = 0` is the noiseless
/// setting.
pub fn sample_response(x: &Matrix, w_star: &Vector, sigma: f64, seed: u64) -> Result<Vector> {
    if x.ncols() != w_star.len() {
        return Err(Error::dims(format!(
            "design has {} columns but ground truth has length {}",
            x.ncols(),
            w_star.len()
        )));
    }
    if sigma < 0.0 {
        return Err(Error::invalid("noise level must be >= 0"));
    }
    linalg::check_finite(x, "design matrix")?;
    let mut y = x * w_star;
    if sigma > 0.0 {
        let mut rng = stream_rng(seed, "noise");
        for i in 0..y.len() {
            let e: f64 = rng.sample(StandardNormal);
            y[i] += sigma * e;
        }
    }
    Ok(y)
}

/// ℓ2 distance between an estimate and the ground truth.
pub fn estimation_error(w_hat: &Vector, w_star: &Vector) -> Result<f64> {
    if w_hat.len() != w_star.len() {
        return Err(Error::dims(format!(
            "estimate has length {} but ground truth has length {}",
            w_hat.len(),
            w_star.len()
        )));
    }
    Ok((w_hat - w_star).norm())
}
