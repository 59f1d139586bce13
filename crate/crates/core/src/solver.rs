//! Penalized least squares with the trace Lasso penalty.
//!
//! The objective is `½‖y − Xw‖² + λ‖X·Diag(w)‖_*`, minimized by iteratively
//! reweighted least squares: the trace norm admits the variational bound
//! `‖M‖_* = ½ inf_{S≻0} tr(M^T S^{-1} M) + tr(S)` (see [`eta_bound`]), which
//! turns each sweep into a ridge-like solve with data-driven per-coordinate
//! weights. A decreasing smoothing sequence `μ_i` keeps `S` invertible along
//! the way; each sweep is
//!
//! 1. eigendecompose `X·Diag(w)²·X^T = U·Diag(s)·U^T` (an `n × n` matrix),
//! 2. form `D = Diag(diag(X^T S^{-1} X))` with `S^{-1} = U·Diag(1/√(s+μ))·U^T`,
//! 3. solve `(X^T X + λD)·w = X^T y` by conjugate gradient, warm-started from
//!    the previous iterate; the operator is applied matrix-free at `O(np)`
//!    per product.

use crate::error::{Error, Result};
use crate::linalg::{self, scale_columns};
use crate::norms;
use crate::{Matrix, Vector};
use rand::prelude::*;
use rand_distr::StandardNormal;

/// Final value of the smoothing sequence: ten times machine precision.
pub const MU_FINAL: f64 = 10.0 * f64::EPSILON;

/// A least-squares problem instance.
#[derive(Debug, Clone)]
pub struct Problem {
    x: Matrix,
    y: Vector,
}

impl Problem {
    pub fn new(x: Matrix, y: Vector) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::invalid("design matrix must be nonempty"));
        }
        if y.len() != x.nrows() {
            return Err(Error::dims(format!(
                "response has length {} but design has {} rows",
                y.len(),
                x.nrows()
            )));
        }
        linalg::check_finite(&x, "design matrix")?;
        linalg::check_finite_vec(&y, "response")?;
        Ok(Self { x, y })
    }

    pub fn design(&self) -> &Matrix {
        &self.x
    }

    pub fn response(&self) -> &Vector {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Where the solver takes its initial iterate from.
#[derive(Debug, Clone, Default)]
pub enum InitPolicy {
    /// Ridge solution with the same λ. Cheap, correctly scaled, and never
    /// exactly sparse, so no coordinate starts glued to zero.
    #[default]
    Ridge,
    /// All zeros.
    Zero,
    /// A caller-provided iterate (e.g. the previous solution on a λ path).
    Warm(Vector),
}

/// Configuration of the IRLS solver.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Regularization weight λ > 0.
    pub lambda: f64,
    /// Hard cap on sweeps.
    pub max_outer: usize,
    /// Strictly positive, nonincreasing, ending at [`MU_FINAL`]. Iterations
    /// beyond its length keep the final value.
    pub mu_schedule: Vec<f64>,
    /// Relative residual tolerance of the inner conjugate-gradient solves.
    pub cg_tol: f64,
    /// Inner iteration cap; `None` means `2p + 8` (the exact-arithmetic
    /// bound is `p`, floating point needs a little slack).
    pub cg_max_iter: Option<usize>,
    /// Outer stop: relative change `‖w_i − w_{i−1}‖/max(‖w_{i−1}‖, 1e-12)`.
    /// Only armed once μ has reached its final value, so annealing cannot be
    /// cut short.
    pub w_tol: f64,
    pub init: InitPolicy,
}

impl SolverConfig {
    /// Defaults: 500 sweeps with a geometric μ schedule from 1 down to
    /// [`MU_FINAL`] spread over all of them, CG at 1e-10 relative, outer
    /// tolerance 1e-8, ridge initialization.
    pub fn new(lambda: f64) -> Self {
        let max_outer = 500;
        Self {
            lambda,
            max_outer,
            mu_schedule: geometric_mu_schedule(max_outer),
            cg_tol: 1e-10,
            cg_max_iter: None,
            w_tol: 1e-8,
            init: InitPolicy::Ridge,
        }
    }

    /// Same defaults but the μ annealing is compressed into `len` sweeps,
    /// with the cap kept at `max_outer`. Shorter schedules trade a little
    /// accuracy for speed on large problems.
    pub fn with_annealing(mut self, len: usize, max_outer: usize) -> Self {
        self.mu_schedule = geometric_mu_schedule(len);
        self.max_outer = max_outer;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::invalid("lambda must be > 0"));
        }
        if self.max_outer == 0 {
            return Err(Error::invalid("max_outer must be >= 1"));
        }
        if self.mu_schedule.is_empty() {
            return Err(Error::invalid("mu schedule must be nonempty"));
        }
        let mut prev = f64::INFINITY;
        for &mu in &self.mu_schedule {
            if !(mu > 0.0) {
                return Err(Error::invalid("mu schedule must be strictly positive"));
            }
            if mu > prev {
                return Err(Error::invalid("mu schedule must be nonincreasing"));
            }
            prev = mu;
        }
        let last = *self.mu_schedule.last().unwrap();
        if (last - MU_FINAL).abs() > 1e-6 * MU_FINAL {
            return Err(Error::invalid(format!(
                "mu schedule must end at 10x machine precision ({MU_FINAL:.3e}), got {last:.3e}"
            )));
        }
        if !(self.cg_tol > 0.0) || !(self.w_tol > 0.0) {
            return Err(Error::invalid("tolerances must be > 0"));
        }
        Ok(())
    }

    fn mu_at(&self, i: usize) -> f64 {
        let idx = i.min(self.mu_schedule.len() - 1);
        self.mu_schedule[idx]
    }
}

/// Geometric decay from 1.0 to [`MU_FINAL`] over `len` values.
pub fn geometric_mu_schedule(len: usize) -> Vec<f64> {
    assert!(len >= 1, "schedule length must be >= 1");
    if len == 1 {
        return vec![MU_FINAL];
    }
    let ratio = MU_FINAL.powf(1.0 / (len as f64 - 1.0));
    let mut out: Vec<f64> = (0..len).map(|i| ratio.powi(i as i32)).collect();
    out[len - 1] = MU_FINAL;
    out
}

/// Outcome of a solve: coefficients plus convergence diagnostics.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub w: Vector,
    /// Smoothed objective `½‖y−Xw‖² + λ·Σ_k √(s_k(w)+μ)` of each iterate,
    /// evaluated with the μ that produced it. Nonincreasing up to roundoff.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Last relative change of the iterate (the outer stopping quantity).
    pub final_residual: f64,
}

/// A regularization path: solutions at a descending λ grid.
#[derive(Debug, Clone)]
pub struct RegPath {
    pub lambdas: Vec<f64>,
    pub solutions: Vec<SolveResult>,
    pub lambda_max: f64,
}

/// Multi-restart report for probing uniqueness of the minimizer.
#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub solutions: Vec<Vector>,
    /// Max over restart pairs of `‖w_a − w_b‖_∞`.
    pub coefficient_spread: f64,
    /// Max over restart pairs of the objective difference.
    pub objective_spread: f64,
}

/// The penalized objective `½‖y − Xw‖² + λ‖X·Diag(w)‖_*`.
pub fn objective(problem: &Problem, w: &Vector, lambda: f64) -> Result<f64> {
    if w.len() != problem.p() {
        return Err(Error::dims(format!(
            "coefficient vector has length {} but problem has p = {}",
            w.len(),
            problem.p()
        )));
    }
    let r = problem.response() - problem.design() * w;
    Ok(0.5 * r.norm_squared() + lambda * norms::trace_lasso(problem.design(), w, false)?)
}

/// The smoothed objective `½‖y−Xw‖² + λ·Σ_k √(s_k + μ)` where `s_k` are the
/// eigenvalues of `X·Diag(w)²·X^T`. This is the jointly convex objective of
/// the variational formulation (including the `μ·tr(S^{-1})` barrier)
/// evaluated at its optimal `S = (X·Diag(w)²·X^T + μI)^{1/2}`.
pub fn smoothed_objective(problem: &Problem, w: &Vector, lambda: f64, mu: f64) -> Result<f64> {
    let m = scale_columns(problem.design(), w);
    let a = &m * m.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let eig = linalg::sym_eigen(&a)?;
    let r = problem.response() - problem.design() * w;
    Ok(0.5 * r.norm_squared() + lambda * smoothed_penalty(&eig.values, mu))
}

fn smoothed_penalty(eigenvalues: &Vector, mu: f64) -> f64 {
    eigenvalues.iter().map(|s| (s.max(0.0) + mu).sqrt()).sum()
}

/// The variational upper bound `½(tr(M^T S^{-1} M) + tr(S)) ≥ ‖M‖_*` for a
/// symmetric positive-definite `S`, with equality at `S = (M M^T)^{1/2}`.
pub fn eta_bound(m: &Matrix, s: &Matrix) -> Result<f64> {
    if s.nrows() != m.nrows() {
        return Err(Error::dims(format!(
            "S is {}x{} but M has {} rows",
            s.nrows(),
            s.ncols(),
            m.nrows()
        )));
    }
    linalg::check_finite(m, "eta_bound M")?;
    let eig = linalg::sym_eigen(s)?;
    let min = eig.values[eig.values.len() - 1];
    if !(min > 0.0) {
        return Err(Error::invalid(format!(
            "S must be positive definite (smallest eigenvalue {min:.3e})"
        )));
    }
    // tr(M^T S^{-1} M) = sum_{k,j} (U^T M)_{kj}^2 / s_k
    let w = eig.vectors.transpose() * m;
    let mut quad = 0.0;
    for k in 0..w.nrows() {
        let row_sq: f64 = w.row(k).iter().map(|v| v * v).sum();
        quad += row_sq / eig.values[k];
    }
    Ok(0.5 * (quad + eig.values.sum()))
}

/// One IRLS sweep at fixed μ: eigendecompose `X·Diag(w)²·X^T`, reweight, and
/// solve the linear system warm-started from `w`. Returns the new iterate and
/// the eigenvalues of the current one (useful for objective bookkeeping).
pub fn irls_sweep(
    problem: &Problem,
    w: &Vector,
    lambda: f64,
    mu: f64,
    cg_tol: f64,
    cg_max_iter: usize,
) -> Result<(Vector, Vector)> {
    let x = problem.design();
    let n = problem.n();
    let p = problem.p();

    let m = scale_columns(x, w);
    let a = &m * m.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let eig = linalg::sym_eigen(&a)?;

    // d_j = x_j^T S^{-1} x_j = sum_k (U^T x_j)_k^2 / sqrt(s_k + mu)
    let z = eig.vectors.transpose() * x;
    let inv_sqrt: Vec<f64> = eig
        .values
        .iter()
        .map(|s| 1.0 / (s.max(0.0) + mu).sqrt())
        .collect();
    let mut d = Vector::zeros(p);
    for j in 0..p {
        let mut acc = 0.0;
        for k in 0..n {
            let zkj = z[(k, j)];
            acc += zkj * zkj * inv_sqrt[k];
        }
        d[j] = acc;
    }

    let xty = x.transpose() * problem.response();
    let gram_diag = Vector::from_fn(p, |j, _| x.column(j).norm_squared());
    let precond = Vector::from_fn(p, |j, _| gram_diag[j] + lambda * d[j]);
    let apply = |v: &Vector| x.transpose() * (x * v) + lambda * d.component_mul(v);
    let w_new =
        linalg::cg_solve_preconditioned(apply, &xty, w, cg_tol, cg_max_iter, Some(&precond))?;
    Ok((w_new, eig.values))
}

/// Ridge solution `(X^T X + λI)^{-1} X^T y` via matrix-free CG.
pub(crate) fn ridge_weights(problem: &Problem, lambda: f64, cg_tol: f64) -> Result<Vector> {
    let x = problem.design();
    let p = problem.p();
    let xty = x.transpose() * problem.response();
    let gram_diag = Vector::from_fn(p, |j, _| x.column(j).norm_squared() + lambda);
    linalg::cg_solve_preconditioned(
        |v: &Vector| x.transpose() * (x * v) + lambda * v,
        &xty,
        &Vector::zeros(p),
        cg_tol,
        8 * p.max(8),
        Some(&gram_diag),
    )
}

/// Minimizes `½‖y − Xw‖² + λ‖X·Diag(w)‖_*` by IRLS with μ annealing.
pub fn irls_solve(problem: &Problem, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    let p = problem.p();
    let lambda = config.lambda;
    let cg_max_iter = config.cg_max_iter.unwrap_or(2 * p + 8).max(1);

    let mut w = match &config.init {
        InitPolicy::Ridge => ridge_weights(problem, lambda, config.cg_tol)
            .map_err(|e| e.with_context("ridge initialization"))?,
        InitPolicy::Zero => Vector::zeros(p),
        InitPolicy::Warm(w0) => {
            if w0.len() != p {
                return Err(Error::dims(format!(
                    "warm start has length {} but problem has p = {}",
                    w0.len(),
                    p
                )));
            }
            linalg::check_finite_vec(w0, "warm start")?;
            w0.clone()
        }
    };

    let final_from = config.mu_schedule.len() - 1;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut rel_change = f64::INFINITY;
    let mut mu_done = 0.0;

    for i in 0..config.max_outer {
        let mu = config.mu_at(i);
        let (w_new, eigenvalues) = irls_sweep(problem, &w, lambda, mu, config.cg_tol, cg_max_iter)
            .map_err(|e| e.with_context(&format!("irls sweep {i}")))?;
        if i > 0 {
            // smoothed objective of the previous iterate, under the μ that
            // produced it; the eigenvalues come for free from this sweep
            let r = problem.response() - problem.design() * &w;
            trace.push(0.5 * r.norm_squared() + lambda * smoothed_penalty(&eigenvalues, mu_done));
        }
        rel_change = (&w_new - &w).norm() / w.norm().max(1e-12);
        w = w_new;
        mu_done = mu;
        iterations = i + 1;
        if i >= final_from && rel_change <= config.w_tol {
            converged = true;
            break;
        }
    }

    // close the trace with the final iterate
    let m = scale_columns(problem.design(), &w);
    let a = &m * m.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let eig = linalg::sym_eigen(&a)?;
    let r = problem.response() - problem.design() * &w;
    trace.push(0.5 * r.norm_squared() + lambda * smoothed_penalty(&eig.values, mu_done));

    Ok(SolveResult {
        w,
        objective_trace: trace,
        converged,
        iterations,
        final_residual: rel_change,
    })
}

/// `λ_max = ‖X‖_op·‖X^T y‖_∞`: for any λ at or above this value the zero
/// vector minimizes the penalized objective.
pub fn lambda_max(x: &Matrix, y: &Vector) -> Result<f64> {
    if y.len() != x.nrows() {
        return Err(Error::dims(format!(
            "response has length {} but design has {} rows",
            y.len(),
            x.nrows()
        )));
    }
    let corr = x.transpose() * y;
    Ok(linalg::operator_norm(x)? * corr.amax())
}

/// Solves along a logarithmic λ grid from `λ_max` down `decades` orders of
/// magnitude, warm-starting every solve from the previous solution.
pub fn reg_path(
    problem: &Problem,
    n_lambdas: usize,
    decades: f64,
    config: &SolverConfig,
) -> Result<RegPath> {
    if n_lambdas < 2 {
        return Err(Error::invalid("a path needs at least two lambda values"));
    }
    if !(decades > 0.0) {
        return Err(Error::invalid("decades must be > 0"));
    }
    let lam_max = lambda_max(problem.design(), problem.response())?;
    if !(lam_max > 0.0) {
        return Err(Error::invalid(
            "lambda_max is zero (X^T y = 0); the path is degenerate",
        ));
    }
    let lambdas: Vec<f64> = (0..n_lambdas)
        .map(|i| lam_max * 10f64.powf(-decades * i as f64 / (n_lambdas as f64 - 1.0)))
        .collect();

    let mut solutions = Vec::with_capacity(n_lambdas);
    let mut warm: Option<Vector> = None;
    for (idx, &lam) in lambdas.iter().enumerate() {
        let mut cfg = config.clone();
        cfg.lambda = lam;
        if let Some(prev) = warm.take() {
            cfg.init = InitPolicy::Warm(prev);
        }
        let sol = irls_solve(problem, &cfg)
            .map_err(|e| e.with_context(&format!("path index {idx} (lambda {lam:.6e})")))?;
        warm = Some(sol.w.clone());
        solutions.push(sol);
    }
    Ok(RegPath {
        lambdas,
        solutions,
        lambda_max: lam_max,
    })
}

/// Runs the solver from `restarts` random initializations and reports the
/// maximal spread between the solutions. Small spreads across restarts are
/// evidence of a unique minimizer.
pub fn uniqueness_probe(
    problem: &Problem,
    lambda: f64,
    restarts: usize,
    seed: u64,
) -> Result<UniquenessReport> {
    if restarts < 2 {
        return Err(Error::invalid("uniqueness probe needs at least 2 restarts"));
    }
    let p = problem.p();
    let scale = ridge_weights(problem, lambda, 1e-10)?.amax().max(1.0);
    let mut rng = crate::datagen::stream_rng(seed, "uniqueness");

    let mut solutions: Vec<Vector> = Vec::with_capacity(restarts);
    let mut objectives = Vec::with_capacity(restarts);
    for r in 0..restarts {
        let w0 = Vector::from_fn(p, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        let mut cfg = SolverConfig::new(lambda);
        cfg.init = InitPolicy::Warm(w0);
        let sol = irls_solve(problem, &cfg).map_err(|e| e.with_context(&format!("restart {r}")))?;
        objectives.push(objective(problem, &sol.w, lambda)?);
        solutions.push(sol.w);
    }

    let mut coefficient_spread: f64 = 0.0;
    let mut objective_spread: f64 = 0.0;
    for a in 0..restarts {
        for b in (a + 1)..restarts {
            coefficient_spread = coefficient_spread.max((&solutions[a] - &solutions[b]).amax());
            objective_spread = objective_spread.max((objectives[a] - objectives[b]).abs());
        }
    }
    Ok(UniquenessReport {
        solutions,
        coefficient_spread,
        objective_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha12Rng;

    fn random_problem(rng: &mut ChaCha12Rng, n: usize, p: usize) -> Problem {
        let x = Matrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
        let y = Vector::from_fn(n, |_, _| rng.sample(StandardNormal));
        Problem::new(x, y).unwrap()
    }

    #[test]
    fn objective_cases() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let problem = random_problem(&mut rng, 5, 7);
        let zero = Vector::zeros(7);
        let expect = 0.5 * problem.response().norm_squared();
        assert!((objective(&problem, &zero, 1.0).unwrap() - expect).abs() < 1e-12);

        let x = Matrix::identity(2, 2);
        let y = Vector::from_vec(vec![1.0, 2.0]);
        let interp = Problem::new(x, y.clone()).unwrap();
        assert!(objective(&interp, &y, 0.0).unwrap().abs() < 1e-15);

        let w = Vector::from_fn(7, |_, _| rng.sample::<f64, _>(StandardNormal));
        let lam = 0.7;
        let m = scale_columns(problem.design(), &w);
        let recompute = 0.5 * (problem.response() - problem.design() * &w).norm_squared()
            + lam * linalg::trace_norm(&m).unwrap();
        assert!((objective(&problem, &w, lam).unwrap() - recompute).abs() < 1e-12);
    }

    #[test]
    fn eta_bound_cases() {
        let i2 = Matrix::identity(2, 2);
        assert!((eta_bound(&i2, &i2).unwrap() - 2.0).abs() < 1e-12);

        let m = Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        assert!((eta_bound(&m, &m).unwrap() - 4.0).abs() < 1e-12);
        assert!((eta_bound(&m, &i2).unwrap() - 6.0).abs() < 1e-12);

        let singular = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            eta_bound(&m, &singular),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn eta_bound_dominates_trace_norm() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..40 {
            let m = Matrix::from_fn(4, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
            let b = Matrix::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
            let s = &b * b.transpose() + 0.1 * Matrix::identity(4, 4);
            let s = (&s + s.transpose()) * 0.5;
            let bound = eta_bound(&m, &s).unwrap();
            let tn = linalg::trace_norm(&m).unwrap();
            assert!(bound >= tn - 1e-10);

            // equality at S = (M M^T + mu I)^(1/2)
            let a = &m * m.transpose();
            let a = (&a + a.transpose()) * 0.5;
            let eig = linalg::sym_eigen(&a).unwrap();
            let mut sqrt = eig.vectors.clone();
            for k in 0..4 {
                let mut col = sqrt.column_mut(k);
                col *= (eig.values[k].max(0.0) + MU_FINAL).sqrt();
            }
            let s_opt = &sqrt * eig.vectors.transpose();
            let s_opt = (&s_opt + s_opt.transpose()) * 0.5;
            let tight = eta_bound(&m, &s_opt).unwrap();
            assert!(
                (tight - tn).abs() <= 1e-6 * tn.max(1.0),
                "bound {tight} vs trace norm {tn}"
            );
        }
    }

    #[test]
    fn mu_schedule_shape() {
        let s = geometric_mu_schedule(60);
        assert_eq!(s.len(), 60);
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert_eq!(*s.last().unwrap(), MU_FINAL);
        for i in 1..s.len() {
            assert!(s[i] <= s[i - 1] && s[i] > 0.0);
        }
        assert_eq!(geometric_mu_schedule(1), vec![MU_FINAL]);
    }

    #[test]
    fn config_validation() {
        let cfg = SolverConfig::new(1.0);
        assert!(cfg.validate().is_ok());
        let mut bad = cfg.clone();
        bad.lambda = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = cfg.clone();
        bad.mu_schedule = vec![1.0, 0.5];
        assert!(bad.validate().is_err(), "must end at MU_FINAL");
        let mut bad = cfg.clone();
        bad.mu_schedule = vec![0.5, 1.0, MU_FINAL];
        assert!(bad.validate().is_err(), "must be nonincreasing");
    }

    #[test]
    fn orthonormal_design_soft_thresholds() {
        let x = Matrix::identity(2, 2);
        let y = Vector::from_vec(vec![3.0, 0.0]);
        let problem = Problem::new(x, y).unwrap();
        let sol = irls_solve(&problem, &SolverConfig::new(1.0)).unwrap();
        assert!(sol.converged);
        assert!((sol.w[0] - 2.0).abs() < 1e-6, "w = {:?}", sol.w);
        assert!(sol.w[1].abs() < 1e-6);
    }

    #[test]
    fn lambda_at_or_above_max_gives_zero() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..5 {
            let problem = random_problem(&mut rng, 6, 10);
            let lam = lambda_max(problem.design(), problem.response()).unwrap();
            let sol = irls_solve(&problem, &SolverConfig::new(lam)).unwrap();
            assert!(sol.w.amax() <= 1e-6, "max |w| = {:.3e}", sol.w.amax());
            let sol = irls_solve(&problem, &SolverConfig::new(1.5 * lam)).unwrap();
            assert!(sol.w.amax() <= 1e-6);
        }
    }

    #[test]
    fn lambda_max_values() {
        let x = Matrix::identity(2, 2);
        let y = Vector::from_vec(vec![1.0, 2.0]);
        assert!((lambda_max(&x, &y).unwrap() - 2.0).abs() < 1e-12);

        // ||2I||_op = 2 and ||(2I)^T (1,1)||_inf = 2
        let x = 2.0 * Matrix::identity(2, 2);
        let y = Vector::from_vec(vec![1.0, 1.0]);
        assert!((lambda_max(&x, &y).unwrap() - 4.0).abs() < 1e-12);

        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for _ in 0..10 {
            let x = Matrix::from_fn(5, 9, |_, _| rng.sample::<f64, _>(StandardNormal));
            let y = Vector::from_fn(5, |_, _| rng.sample::<f64, _>(StandardNormal));
            let lm = lambda_max(&x, &y).unwrap();
            assert!(lm >= (x.transpose() * &y).amax() - 1e-12);
        }
    }

    #[test]
    fn sweep_does_not_increase_smoothed_objective() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        for _ in 0..8 {
            let problem = random_problem(&mut rng, 6, 9);
            let lam = 0.05 * lambda_max(problem.design(), problem.response()).unwrap();
            let w = Vector::from_fn(9, |_, _| rng.sample::<f64, _>(StandardNormal));
            for mu in [1.0, 1e-3, 1e-8] {
                let before = smoothed_objective(&problem, &w, lam, mu).unwrap();
                let (w_new, _) = irls_sweep(&problem, &w, lam, mu, 1e-12, 64).unwrap();
                let after = smoothed_objective(&problem, &w_new, lam, mu).unwrap();
                assert!(
                    after <= before + 1e-8 * before.abs().max(1.0),
                    "sweep increased the smoothed objective: {before} -> {after} (mu = {mu})"
                );
            }
        }
    }

    #[test]
    fn objective_trace_is_monotone() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let problem = random_problem(&mut rng, 8, 12);
        let lam = 0.02 * lambda_max(problem.design(), problem.response()).unwrap();
        let sol = irls_solve(&problem, &SolverConfig::new(lam)).unwrap();
        assert_eq!(sol.objective_trace.len(), sol.iterations);
        assert!(sol.objective_trace.len() <= 500);
        for pair in sol.objective_trace.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-8 * pair[0].abs().max(1.0),
                "trace not monotone: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn column_permutation_equivariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(16);
        let problem = random_problem(&mut rng, 7, 10);
        let lam = 0.05 * lambda_max(problem.design(), problem.response()).unwrap();
        let sol = irls_solve(&problem, &SolverConfig::new(lam)).unwrap();

        let perm: Vec<usize> = vec![3, 1, 4, 0, 9, 7, 2, 8, 6, 5];
        let xp = Matrix::from_fn(7, 10, |i, j| problem.design()[(i, perm[j])]);
        let permuted = Problem::new(xp, problem.response().clone()).unwrap();
        let solp = irls_solve(&permuted, &SolverConfig::new(lam)).unwrap();
        for j in 0..10 {
            assert!(
                (solp.w[j] - sol.w[perm[j]]).abs() < 1e-6,
                "permutation equivariance violated at column {j}"
            );
        }
    }

    #[test]
    fn path_shape_and_start() {
        let mut rng = ChaCha12Rng::seed_from_u64(18);
        let problem = random_problem(&mut rng, 6, 8);
        let cfg = SolverConfig::new(1.0).with_annealing(40, 120);

        let path = reg_path(&problem, 2, 1.0, &cfg).unwrap();
        assert!((path.lambdas[0] - path.lambda_max).abs() < 1e-12);
        assert!((path.lambdas[1] - path.lambda_max / 10.0).abs() < 1e-12 * path.lambda_max);

        let path = reg_path(&problem, 6, 2.0, &cfg).unwrap();
        assert!(path.solutions[0].w.amax() <= 1e-6, "path starts at zero");
        for (lam, sol) in path.lambdas.iter().zip(&path.solutions) {
            let at_zero = 0.5 * problem.response().norm_squared();
            // near lambda_max the solution is within ~1e-8 of zero, which
            // costs about lambda*||X Diag(w)||_* ~ 1e-6 of slack
            assert!(objective(&problem, &sol.w, *lam).unwrap() <= at_zero * (1.0 + 1e-5));
        }
        for pair in path.lambdas.windows(2) {
            assert!(pair[1] < pair[0]);
        }

        assert!(reg_path(&problem, 1, 1.0, &cfg).is_err());
    }

    #[test]
    fn uniqueness_probe_basics() {
        let x = Matrix::identity(2, 2);
        let y = Vector::from_vec(vec![2.0, -1.0]);
        let problem = Problem::new(x, y).unwrap();
        assert!(uniqueness_probe(&problem, 0.5, 1, 0).is_err());
        let report = uniqueness_probe(&problem, 0.5, 3, 0).unwrap();
        assert!(report.coefficient_spread <= 1e-6);
        assert!(report.objective_spread <= 1e-10);
    }

    #[test]
    fn duplicated_columns_get_equal_weights() {
        let mut rng = ChaCha12Rng::seed_from_u64(20);
        let mut x = Matrix::from_fn(8, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let dup = x.column(0).into_owned();
        x.set_column(3, &dup);
        let w_true = Vector::from_vec(vec![1.0, 0.5, 0.0, 1.0, 0.0, -0.5]);
        let y = &x * &w_true;
        let problem = Problem::new(x, y).unwrap();
        let lam = 0.05 * lambda_max(problem.design(), problem.response()).unwrap();
        let report = uniqueness_probe(&problem, lam, 4, 1).unwrap();
        assert!(
            report.coefficient_spread <= 1e-4,
            "spread {}",
            report.coefficient_spread
        );
        for w in &report.solutions {
            assert!(
                (w[0] - w[3]).abs() <= 1e-4,
                "duplicated columns differ: {} vs {}",
                w[0],
                w[3]
            );
        }
    }
}
