//! Reference regularizers: ridge (Tikhonov), Lasso, and elastic net.
//!
//! The Lasso and elastic net share one solver: proximal gradient with the
//! soft-thresholding step at step size `1/(‖X‖_op² + λ₂)`, accelerated with a
//! monotone safeguard (the accelerated candidate is only accepted when it
//! decreases the objective, otherwise the iterate stays put while the
//! momentum sequence keeps advancing). Stopping is by duality gap, computed
//! through the augmented-design view `[X; √λ₂·I]` so one certificate covers
//! both penalties.

use crate::error::{Error, Result};
use crate::linalg;
use crate::solver::{Problem, SolveResult};
use crate::Vector;

/// Knobs of the proximal-gradient solver. The defaults certify the objective
/// to a 1e-8 relative duality gap; iterates that reach an exact fixed point
/// of the proximal step (the f64 floor, typically a gap around 1e-9) also
/// count as converged.
#[derive(Debug, Clone)]
pub struct ProxOptions {
    /// Stop once `gap ≤ gap_tol·max(objective, 1e-12)`.
    pub gap_tol: f64,
    /// Stop once the iterate stalls: relative change at most this for a few
    /// consecutive iterations.
    pub iterate_tol: f64,
    /// Iteration cap; exceeding it is a convergence error.
    pub max_iter: usize,
    /// Warm start (defaults to zero).
    pub init: Option<Vector>,
    /// Record the per-iteration objective in the result.
    pub record_trace: bool,
}

impl Default for ProxOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            iterate_tol: 1e-15,
            max_iter: 200_000,
            init: None,
            record_trace: true,
        }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Ridge regression `w = (X^T X + λI)^{-1} X^T y`, solved matrix-free by
/// preconditioned conjugate gradient.
pub fn ridge_solve(problem: &Problem, lambda: f64) -> Result<SolveResult> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("ridge requires lambda > 0"));
    }
    let x = problem.design();
    let p = problem.p();
    let xty = x.transpose() * problem.response();
    let gram_diag = Vector::from_fn(p, |j, _| x.column(j).norm_squared() + lambda);
    let out = linalg::cg_solve_counted(
        |v: &Vector| x.transpose() * (x * v) + lambda * v,
        &xty,
        &Vector::zeros(p),
        1e-12,
        20 * p.max(4),
        Some(&gram_diag),
    )
    .map_err(|e| e.with_context("ridge solve"))?;
    let w = out.x;
    let r = problem.response() - x * &w;
    let objective = 0.5 * r.norm_squared() + 0.5 * lambda * w.norm_squared();
    Ok(SolveResult {
        w,
        objective_trace: vec![objective],
        converged: true,
        iterations: out.iterations,
        final_residual: out.rel_residual,
    })
}

/// Lasso: minimizes `½‖y − Xw‖² + λ‖w‖₁`.
pub fn lasso_solve(problem: &Problem, lambda: f64) -> Result<SolveResult> {
    lasso_solve_with(problem, lambda, &ProxOptions::default())
}

pub fn lasso_solve_with(
    problem: &Problem,
    lambda: f64,
    opts: &ProxOptions,
) -> Result<SolveResult> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lasso requires lambda > 0"));
    }
    prox_gradient(problem, lambda, 0.0, opts)
}

/// Elastic net: minimizes `½‖y − Xw‖² + λ₁‖w‖₁ + (λ₂/2)‖w‖²`. Reduces to the
/// Lasso at `λ₂ = 0` and to ridge at `λ₁ = 0`.
pub fn elastic_net_solve(problem: &Problem, lambda1: f64, lambda2: f64) -> Result<SolveResult> {
    elastic_net_solve_with(problem, lambda1, lambda2, &ProxOptions::default())
}

pub fn elastic_net_solve_with(
    problem: &Problem,
    lambda1: f64,
    lambda2: f64,
    opts: &ProxOptions,
) -> Result<SolveResult> {
    if lambda1 < 0.0 || lambda2 < 0.0 {
        return Err(Error::invalid("elastic net requires nonnegative penalties"));
    }
    if lambda1 == 0.0 && lambda2 == 0.0 {
        return Err(Error::invalid("elastic net requires lambda1 + lambda2 > 0"));
    }
    if lambda1 == 0.0 {
        // pure ridge; the duality-gap machinery needs lambda1 > 0
        return ridge_solve(problem, lambda2);
    }
    prox_gradient(problem, lambda1, lambda2, opts)
}

/// Primal objective, residual taken as given.
fn primal(r_norm_sq: f64, w: &Vector, l1: f64, l2: f64) -> f64 {
    0.5 * r_norm_sq + l1 * w.abs().sum() + 0.5 * l2 * w.norm_squared()
}

/// Duality gap via the augmented design `[X; √λ₂·I]` with response `(y, 0)`:
/// the dual point is the scaled augmented residual.
fn duality_gap(
    problem: &Problem,
    w: &Vector,
    r: &Vector,
    l1: f64,
    l2: f64,
) -> f64 {
    let x = problem.design();
    let y = problem.response();
    let r_aug_grad = x.transpose() * r - l2 * w; // X̃^T r̃
    let scale = (l1 / r_aug_grad.amax().max(f64::MIN_POSITIVE)).min(1.0);
    // D(θ) = ½‖y‖² − ½‖θ − ỹ‖² with θ = scale·r̃ and ỹ = (y, 0)
    let theta1_minus_y = Vector::from_fn(y.len(), |i, _| scale * r[i] - y[i]);
    let theta2_sq = scale * scale * l2 * w.norm_squared();
    let dual = 0.5 * y.norm_squared() - 0.5 * (theta1_minus_y.norm_squared() + theta2_sq);
    let p = primal(r.norm_squared(), w, l1, l2);
    p - dual
}

fn prox_gradient(problem: &Problem, l1: f64, l2: f64, opts: &ProxOptions) -> Result<SolveResult> {
    let x = problem.design();
    let y = problem.response();
    let p = problem.p();

    let step = 1.0 / (linalg::operator_norm(x)?.powi(2) + l2);
    let thresh = step * l1;

    let w0 = match &opts.init {
        Some(w0) => {
            if w0.len() != p {
                return Err(Error::dims(format!(
                    "warm start has length {} but problem has p = {}",
                    w0.len(),
                    p
                )));
            }
            w0.clone()
        }
        None => Vector::zeros(p),
    };

    // The internal sequence is FISTA with gradient-based restart; the
    // reported iterate is the best one seen so far, which keeps the recorded
    // objective monotone per iteration.
    let mut z = w0.clone();
    let mut v = w0;
    let mut t = 1.0f64;
    let mut r_best = y - x * &z;
    let mut f_best = primal(r_best.norm_squared(), &z, l1, l2);
    let mut w_best = z.clone();
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(f_best);
    }

    const GAP_CHECK_EVERY: usize = 10;
    let gap_scale = |f: f64| f.abs().max(1e-12);
    let mut gap = duality_gap(problem, &w_best, &r_best, l1, l2);
    if gap <= opts.gap_tol * gap_scale(f_best) {
        return Ok(SolveResult {
            w: w_best,
            objective_trace: trace,
            converged: true,
            iterations: 0,
            final_residual: gap,
        });
    }

    let mut stalled = 0usize;
    for it in 1..=opts.max_iter {
        let grad = x.transpose() * (x * &v - y) + l2 * &v;
        let mut z_new = &v - step * grad;
        for j in 0..p {
            z_new[j] = soft_threshold(z_new[j], thresh);
        }

        // restart when the momentum points against the direction of progress
        let momentum_uphill = (&v - &z_new).dot(&(&z_new - &z)) > 0.0;
        if momentum_uphill {
            t = 1.0;
            v = z_new.clone();
        } else {
            let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            v = &z_new + ((t - 1.0) / t_new) * (&z_new - &z);
            t = t_new;
        }
        let change = (&z_new - &z).norm();
        if change <= opts.iterate_tol * z.norm().max(f64::MIN_POSITIVE) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        z = z_new;

        let r_z = y - x * &z;
        let f_z = primal(r_z.norm_squared(), &z, l1, l2);
        if f_z < f_best {
            f_best = f_z;
            w_best = z.clone();
            r_best = r_z;
        }
        if opts.record_trace {
            trace.push(f_best);
        }

        let stall_stop = stalled >= 3;
        if it % GAP_CHECK_EVERY == 0 || it == opts.max_iter || stall_stop {
            gap = duality_gap(problem, &w_best, &r_best, l1, l2);
            if stall_stop || gap <= opts.gap_tol * gap_scale(f_best) {
                return Ok(SolveResult {
                    w: w_best,
                    objective_trace: trace,
                    converged: true,
                    iterations: it,
                    final_residual: gap,
                });
            }
        }
    }
    Err(Error::Convergence {
        context: "proximal gradient".into(),
        iterations: opts.max_iter,
        residual: gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Matrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn random_problem(rng: &mut ChaCha12Rng, n: usize, p: usize) -> Problem {
        let x = Matrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
        let y = Vector::from_fn(n, |_, _| rng.sample(StandardNormal));
        Problem::new(x, y).unwrap()
    }

    /// Cyclic coordinate descent for the elastic net, independent of the
    /// proximal solver; used as an oracle.
    fn coordinate_descent(problem: &Problem, l1: f64, l2: f64, sweeps: usize) -> Vector {
        let x = problem.design();
        let y = problem.response();
        let p = problem.p();
        let col_sq: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared()).collect();
        let mut w = Vector::zeros(p);
        let mut r = y.clone();
        for _ in 0..sweeps {
            for j in 0..p {
                if col_sq[j] == 0.0 {
                    continue;
                }
                let old = w[j];
                let rho = x.column(j).dot(&r) + col_sq[j] * old;
                let new = soft_threshold(rho, l1) / (col_sq[j] + l2);
                if new != old {
                    r -= (new - old) * x.column(j);
                    w[j] = new;
                }
            }
        }
        w
    }

    #[test]
    fn ridge_examples() {
        let x = Matrix::identity(2, 2);
        let y = Vector::from_vec(vec![2.0, 4.0]);
        let problem = Problem::new(x, y).unwrap();
        let sol = ridge_solve(&problem, 1.0).unwrap();
        assert!((sol.w[0] - 1.0).abs() < 1e-10);
        assert!((sol.w[1] - 2.0).abs() < 1e-10);

        // shrinkage is monotone in lambda
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let problem = random_problem(&mut rng, 10, 6);
        let mut prev = f64::INFINITY;
        for lam in [0.1, 1.0, 10.0, 100.0] {
            let n = ridge_solve(&problem, lam).unwrap().w.norm();
            assert!(n <= prev + 1e-12);
            prev = n;
        }

        // tiny lambda on a full-rank tall problem: least squares
        let problem = random_problem(&mut rng, 20, 10);
        let sol = ridge_solve(&problem, 1e-12).unwrap();
        let gram = problem.design().transpose() * problem.design();
        let ls = gram
            .cholesky()
            .unwrap()
            .solve(&(problem.design().transpose() * problem.response()));
        assert!((&sol.w - &ls).norm() <= 1e-6 * ls.norm());
    }

    #[test]
    fn lasso_orthonormal_soft_threshold() {
        let y = Vector::from_vec(vec![3.0, -0.5, 1.0, 0.0]);
        let problem = Problem::new(Matrix::identity(4, 4), y.clone()).unwrap();
        let lam = 0.75;
        let sol = lasso_solve(&problem, lam).unwrap();
        for j in 0..4 {
            let expect = soft_threshold(y[j], lam);
            assert!((sol.w[j] - expect).abs() < 1e-8, "coordinate {j}");
        }
    }

    #[test]
    fn lasso_zero_beyond_dual_threshold() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..5 {
            let problem = random_problem(&mut rng, 8, 12);
            let thresh = (problem.design().transpose() * problem.response()).amax();
            let sol = lasso_solve(&problem, thresh * 1.0001).unwrap();
            assert!(sol.w.amax() == 0.0);
        }
    }

    #[test]
    fn lasso_matches_coordinate_descent() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..5 {
            let problem = random_problem(&mut rng, 10, 20);
            let lam = 0.2 * (problem.design().transpose() * problem.response()).amax();
            let sol = lasso_solve(&problem, lam).unwrap();
            let w_cd = coordinate_descent(&problem, lam, 0.0, 4000);
            let f = |w: &Vector| {
                0.5 * (problem.response() - problem.design() * w).norm_squared()
                    + lam * w.abs().sum()
            };
            let (a, b) = (f(&sol.w), f(&w_cd));
            assert!(
                (a - b).abs() <= 1e-6 * b.abs().max(1e-12),
                "prox {a} vs cd {b}"
            );
        }
    }

    #[test]
    fn elastic_net_orthonormal_closed_form() {
        let y = Vector::from_vec(vec![2.0, -1.0, 0.3]);
        let problem = Problem::new(Matrix::identity(3, 3), y.clone()).unwrap();
        let (l1, l2) = (0.5, 2.0);
        let sol = elastic_net_solve(&problem, l1, l2).unwrap();
        for j in 0..3 {
            let expect = soft_threshold(y[j], l1) / (1.0 + l2);
            assert!((sol.w[j] - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn elastic_net_reductions() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let problem = random_problem(&mut rng, 12, 8);

        let ridge = ridge_solve(&problem, 2.0).unwrap();
        let enet = elastic_net_solve(&problem, 0.0, 2.0).unwrap();
        assert!((&ridge.w - &enet.w).norm() <= 1e-8 * ridge.w.norm().max(1.0));

        let lam = 0.3 * (problem.design().transpose() * problem.response()).amax();
        let lasso = lasso_solve(&problem, lam).unwrap();
        let enet = elastic_net_solve(&problem, lam, 0.0).unwrap();
        assert!((&lasso.w - &enet.w).norm() <= 1e-7 * lasso.w.norm().max(1.0));

        assert!(elastic_net_solve(&problem, 0.0, 0.0).is_err());
    }

    #[test]
    fn elastic_net_ties_duplicated_columns() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let mut x = Matrix::from_fn(10, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let dup = x.column(1).into_owned();
        x.set_column(4, &dup);
        let w_true = Vector::from_vec(vec![0.0, 1.0, -0.5, 0.0, 1.0, 0.2]);
        let y = &x * &w_true + 0.1
            * Vector::from_fn(10, |_, _| rng.sample::<f64, _>(StandardNormal));
        let problem = Problem::new(x, y).unwrap();
        let sol = elastic_net_solve(&problem, 0.4, 0.7).unwrap();
        assert!(
            (sol.w[1] - sol.w[4]).abs() < 1e-6,
            "duplicates differ: {} vs {}",
            sol.w[1],
            sol.w[4]
        );
    }

    #[test]
    fn objective_trace_monotone_and_no_worse_than_zero() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for (l1, l2) in [(0.4, 0.0), (0.3, 0.5)] {
            let problem = random_problem(&mut rng, 9, 14);
            let sol = prox_gradient(&problem, l1, l2, &ProxOptions::default()).unwrap();
            for pair in sol.objective_trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12 * pair[0].abs().max(1.0));
            }
            let at_zero = 0.5 * problem.response().norm_squared();
            assert!(*sol.objective_trace.last().unwrap() <= at_zero + 1e-12);
        }
    }

    #[test]
    fn baselines_are_permutation_equivariant() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let problem = random_problem(&mut rng, 9, 7);
        let perm = [4usize, 2, 6, 0, 3, 1, 5];
        let xp = Matrix::from_fn(9, 7, |i, j| problem.design()[(i, perm[j])]);
        let permuted = Problem::new(xp, problem.response().clone()).unwrap();

        let lam = 0.25 * (problem.design().transpose() * problem.response()).amax();
        let solvers: Vec<(&str, Box<dyn Fn(&Problem) -> Vector>)> = vec![
            ("ridge", Box::new(move |pr| ridge_solve(pr, 1.3).unwrap().w)),
            ("lasso", Box::new(move |pr| lasso_solve(pr, lam).unwrap().w)),
            (
                "enet",
                Box::new(move |pr| elastic_net_solve(pr, lam, 0.8).unwrap().w),
            ),
        ];
        for (name, solve) in solvers {
            let w = solve(&problem);
            let wp = solve(&permuted);
            for j in 0..7 {
                assert!(
                    (wp[j] - w[perm[j]]).abs() < 1e-6,
                    "{name} not equivariant at column {j}"
                );
            }
        }
    }

    #[test]
    fn warm_start_is_accepted() {
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let problem = random_problem(&mut rng, 8, 10);
        let lam = 0.3 * (problem.design().transpose() * problem.response()).amax();
        let cold = lasso_solve(&problem, lam).unwrap();
        let opts = ProxOptions {
            init: Some(cold.w.clone()),
            ..Default::default()
        };
        let warm = lasso_solve_with(&problem, lam, &opts).unwrap();
        assert!(warm.iterations <= cold.iterations);
        assert!((&warm.w - &cold.w).norm() <= 1e-6 * cold.w.norm().max(1.0));
    }
}
