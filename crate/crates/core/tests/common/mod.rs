//! Shared helpers and independent oracles for the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use tracelasso::linalg;
use tracelasso::solver::{objective, Problem};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn randn_matrix(rng: &mut ChaCha12Rng, n: usize, p: usize) -> Matrix {
    Matrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

pub fn randn_vector(rng: &mut ChaCha12Rng, p: usize) -> Vector {
    Vector::from_fn(p, |_, _| rng.sample(StandardNormal))
}

/// Random matrix with unit-norm columns.
pub fn random_unit_columns(rng: &mut ChaCha12Rng, k: usize, p: usize) -> Matrix {
    let mut m = randn_matrix(rng, k, p);
    for j in 0..p {
        let norm = m.column(j).norm();
        let mut col = m.column_mut(j);
        col /= norm;
    }
    m
}

/// Random square matrix with orthonormal columns.
pub fn random_orthonormal(rng: &mut ChaCha12Rng, n: usize) -> Matrix {
    randn_matrix(rng, n, n).qr().q()
}

/// Random matrix with exactly the given rank and singular values in (1, 3).
pub fn random_rank(rng: &mut ChaCha12Rng, n: usize, p: usize, rank: usize) -> Matrix {
    let qu = randn_matrix(rng, n, n).qr().q().columns(0, rank).into_owned();
    let qv = randn_matrix(rng, p, p).qr().q().columns(0, rank).into_owned();
    let mut m = Matrix::zeros(n, p);
    for k in 0..rank {
        let s = 1.0 + rng.random::<f64>() * 2.0;
        m += s * qu.column(k) * qv.column(k).transpose();
    }
    m
}

/// Random regression problem with a planted sparse model plus noise.
pub fn random_sparse_problem(
    rng: &mut ChaCha12Rng,
    n: usize,
    p: usize,
    k: usize,
    noise: f64,
) -> Problem {
    let x = randn_matrix(rng, n, p);
    let mut w = Vector::zeros(p);
    for i in 0..k {
        w[i] = 2.0 * (rng.random::<f64>() - 0.5);
    }
    let y = &x * &w + noise * randn_vector(rng, n);
    Problem::new(x, y).unwrap()
}

/// Independent optimizer for the trace-Lasso objective: a target-level
/// subgradient method (Polyak steps toward "best minus delta", with delta
/// halved whenever an epoch fails to gain enough), run for a fixed number of
/// subgradient steps from the ridge solution. Returns the best objective
/// value seen.
///
/// The subgradient of the penalty at `w` is `λ·diag(X^T U V^T)` where
/// `U Σ V^T` is the SVD of `X·Diag(w)`; `U V^T` is computed from the
/// eigendecomposition of the small Gram matrix `(X·Diag(w))(X·Diag(w))^T`.
pub fn subgradient_best_objective(problem: &Problem, lambda: f64, iters: usize) -> f64 {
    let x = problem.design();
    let y = problem.response();
    let n = problem.n();
    let p = problem.p();

    let w_ridge = tracelasso::baselines::ridge_solve(problem, lambda)
        .expect("ridge init")
        .w;
    let mut w = w_ridge;
    let mut best = objective(problem, &w, lambda).unwrap();
    let mut w_best = w.clone();
    let mut delta = 0.1 * best.abs().max(1e-12);
    let mut gained = 0.0;
    let mut epoch_len = 0usize;
    const EPOCH: usize = 400;

    for _ in 0..iters {
        let m = {
            let mut m = x.clone();
            for j in 0..p {
                let mut col = m.column_mut(j);
                col *= w[j];
            }
            m
        };
        let gram = &m * m.transpose();
        let gram = (&gram + gram.transpose()) * 0.5;
        let eig = linalg::sym_eigen(&gram).unwrap();
        let s_max = eig.values.amax();

        // f(w) = 1/2 ||y - Xw||^2 + lambda * sum sqrt(eigenvalues)
        let r = y - x * &w;
        let f = 0.5 * r.norm_squared()
            + lambda
                * eig
                    .values
                    .iter()
                    .map(|v| v.max(0.0).sqrt())
                    .sum::<f64>();
        if f < best {
            gained += best - f;
            best = f;
            w_best = w.clone();
        }

        // U V^T = C M with C = U Diag(1/sqrt(s)) U^T over the positive part
        let mut c = Matrix::zeros(n, n);
        for k in 0..n {
            let s = eig.values[k];
            if s > s_max * 1e-24 && s > 0.0 {
                let u = eig.vectors.column(k);
                c += (1.0 / s.sqrt()) * &u * u.transpose();
            }
        }
        let uvt = &c * &m;
        let gpen = Vector::from_fn(p, |j, _| x.column(j).dot(&uvt.column(j)));
        let g = x.transpose() * (x * &w - y) + lambda * gpen;
        let gn2 = g.norm_squared().max(1e-300);
        let step = (f - (best - delta)).max(0.0) / gn2;
        w -= step * g;

        epoch_len += 1;
        if epoch_len >= EPOCH {
            if gained < 0.5 * delta {
                delta *= 0.5;
                w = w_best.clone();
            }
            gained = 0.0;
            epoch_len = 0;
        }
    }
    objective(problem, &w_best, lambda).unwrap()
}

/// Runs a named acceptance criterion, printing one PASS/FAIL line.
pub fn criterion<F>(name: &str, body: F)
where
    F: FnOnce() -> Result<(), String>,
{
    match body() {
        Ok(()) => println!("acceptance {name}: PASS"),
        Err(msg) => {
            println!("acceptance {name}: FAIL: {msg}");
            panic!("acceptance criterion failed: {name}: {msg}");
        }
    }
}

/// `Err` with a formatted message unless the condition holds.
#[macro_export]
macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !($cond) {
            return Err(format!($($arg)+));
        }
    };
}
