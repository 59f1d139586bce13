//! Instance builders for the perturbation-check command.

use anyhow::{bail, Result};
use rand::prelude::*;
use rand_distr::StandardNormal;

use crate::io::Matrix;
use tracelasso::datagen::stream_rng;
use tracelasso::linalg;
use tracelasso::perturbation::{expansion_residual_report, ResidualRow};

/// Builds a random `(M, Δ)` instance (optionally rank-deficient, optionally
/// purely diagonal) and reports the expansion residuals over the `t` grid.
pub fn run_perturb_check(
    n: usize,
    p: usize,
    rank: Option<usize>,
    t_grid: &[f64],
    seed: u64,
    diagonal: bool,
) -> Result<Vec<ResidualRow>> {
    if n == 0 || p == 0 {
        bail!("need n >= 1 and p >= 1");
    }
    let full = n.min(p);
    let rank = rank.unwrap_or(full);
    if rank == 0 || rank > full {
        bail!("rank must be in 1..={full}");
    }
    let mut rng = stream_rng(seed, "perturb");

    let (m, delta) = if diagonal {
        // diagonal instances: the expansion is exact for them
        let mut m = Matrix::zeros(n, p);
        for i in 0..rank {
            m[(i, i)] = 1.0 + rng.random::<f64>() * 2.0;
        }
        let mut delta = Matrix::zeros(n, p);
        for i in 0..full {
            delta[(i, i)] = 2.0 * (rng.random::<f64>() - 0.5);
        }
        (m, delta)
    } else {
        let qu = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal))
            .qr()
            .q()
            .columns(0, rank)
            .into_owned();
        let qv = Matrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal))
            .qr()
            .q()
            .columns(0, rank)
            .into_owned();
        let mut m = Matrix::zeros(n, p);
        for k in 0..rank {
            let s = 1.0 + rng.random::<f64>() * 2.0;
            m += s * qu.column(k) * qv.column(k).transpose();
        }
        let raw = Matrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let delta = &raw / linalg::operator_norm(&raw)?;
        (m, delta)
    };

    Ok(expansion_residual_report(&m, &delta, t_grid)?)
}

/// Default scale grid for the residual report.
pub fn default_t_grid() -> Vec<f64> {
    vec![1e-2, 5e-3, 2.5e-3, 1.25e-3]
}
