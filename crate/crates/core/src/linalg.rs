//! Dense linear-algebra kernels used by every other module.
//!
//! All operations are pure: inputs are borrowed, outputs are fresh values,
//! nothing is cached or mutated, so everything here is safe to call from
//! concurrent tasks.

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// Relative tolerance for the symmetry check of [`sym_eigen`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric eigendecomposition `A = V·Diag(values)·V^T`, eigenvalues sorted
/// in descending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vector,
    pub vectors: Matrix,
}

/// Thin singular value decomposition `M = U·Diag(singular)·V^T` with
/// `r = min(n, p)` singular values sorted descending. Zero singular values
/// are retained, not truncated.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors, `n × r`.
    pub left: Matrix,
    /// Singular values, nonnegative, descending.
    pub singular: Vector,
    /// Right singular vectors, `p × r`.
    pub right: Matrix,
}

pub(crate) fn check_finite(m: &Matrix, name: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} contains non-finite entries")))
    }
}

pub(crate) fn check_finite_vec(v: &Vector, name: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} contains non-finite entries")))
    }
}

/// Returns `X·Diag(w)`, i.e. `X` with column `j` scaled by `w[j]`.
pub(crate) fn scale_columns(x: &Matrix, w: &Vector) -> Matrix {
    let mut m = x.clone();
    for j in 0..m.ncols() {
        let mut col = m.column_mut(j);
        col *= w[j];
    }
    m
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
///
/// The input must be square and symmetric to `1e-12` relative; anything else
/// is rejected as invalid input.
pub fn sym_eigen(a: &Matrix) -> Result<SymEigen> {
    if a.nrows() != a.ncols() {
        return Err(Error::dims(format!(
            "sym_eigen expects a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() == 0 {
        return Err(Error::invalid("sym_eigen expects at least a 1x1 matrix"));
    }
    check_finite(a, "sym_eigen input")?;
    let scale = a.amax();
    let mut asym: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::invalid(format!(
            "sym_eigen input is not symmetric (max asymmetry {asym:.3e}, scale {scale:.3e})"
        )));
    }

    let eig = a
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Convergence {
            context: "symmetric eigendecomposition".into(),
            iterations: 0,
            residual: f64::NAN,
        })?;

    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let values = Vector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SymEigen { values, vectors })
}

/// One-sided Jacobi SVD workhorse: rotates column pairs of the working
/// matrix until all columns are mutually orthogonal, optionally accumulating
/// the rotations. Returns the converged working matrix and the accumulated
/// orthogonal factor.
///
/// The working matrix is `m` when `n >= p` and `m^T` otherwise, so the pair
/// loop always runs over the smaller dimension.
fn jacobi_orthogonalize(work: &mut Matrix, accumulate: bool) -> Result<Option<Matrix>> {
    let cols = work.ncols();
    let mut v = if accumulate {
        Some(Matrix::identity(cols, cols))
    } else {
        None
    };
    const MAX_SWEEPS: usize = 64;
    // scale-invariant orthogonality criterion |w_i . w_j| <= tol*|w_i||w_j|
    const ORTHO_TOL: f64 = 1.0e-15;
    // columns this small are numerically zero; rotating them against the
    // roundoff noise they contain would cycle forever
    let zero_floor = (f64::EPSILON * work.norm()).powi(2);
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..cols.saturating_sub(1) {
            for j in (i + 1)..cols {
                let a = work.column(i).norm_squared();
                let b = work.column(j).norm_squared();
                if a <= zero_floor || b <= zero_floor {
                    continue;
                }
                let d = work.column(i).dot(&work.column(j));
                if d == 0.0 || d * d <= ORTHO_TOL * ORTHO_TOL * a * b {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * d);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..work.nrows() {
                    let wi = work[(r, i)];
                    let wj = work[(r, j)];
                    work[(r, i)] = c * wi - s * wj;
                    work[(r, j)] = s * wi + c * wj;
                }
                if let Some(v) = v.as_mut() {
                    for r in 0..cols {
                        let vi = v[(r, i)];
                        let vj = v[(r, j)];
                        v[(r, i)] = c * vi - s * vj;
                        v[(r, j)] = s * vi + c * vj;
                    }
                }
            }
        }
        if !rotated {
            return Ok(v);
        }
    }
    Err(Error::Convergence {
        context: "jacobi singular value decomposition".into(),
        iterations: MAX_SWEEPS,
        residual: f64::NAN,
    })
}

/// Column norms of the converged working matrix, sorted descending with the
/// permutation that produced the order.
fn sorted_column_norms(work: &Matrix) -> (Vec<f64>, Vec<usize>) {
    let norms: Vec<f64> = (0..work.ncols()).map(|j| work.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let sorted = order.iter().map(|&i| norms[i]).collect();
    (sorted, order)
}

/// Singular value decomposition with `min(n, p)` singular values, descending,
/// zeros retained. Computed by one-sided Jacobi rotations, which keep full
/// accuracy on exactly rank-deficient inputs.
pub fn svd(m: &Matrix) -> Result<Svd> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::invalid("svd expects a nonempty matrix"));
    }
    check_finite(m, "svd input")?;
    let (n, p) = m.shape();
    let transposed = p > n;
    let mut work = if transposed { m.transpose() } else { m.clone() };
    let rot = jacobi_orthogonalize(&mut work, true)?.expect("accumulated");
    let (singular, order) = sorted_column_norms(&work);
    let r = singular.len();

    // normalized converged columns; numerically zero columns hold only
    // roundoff noise and are completed into an orthonormal basis instead
    let zero_floor = f64::EPSILON * work.norm();
    let mut cols = Matrix::zeros(work.nrows(), r);
    let mut zero_cols = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        if singular[dst] > zero_floor {
            cols.set_column(dst, &(work.column(src) / singular[dst]));
        } else {
            zero_cols.push(dst);
        }
    }
    if !zero_cols.is_empty() {
        let kept = r - zero_cols.len();
        let fill = complete_orthonormal_basis(&cols.columns(0, kept).into_owned());
        for (k, &dst) in zero_cols.iter().enumerate() {
            cols.set_column(dst, &fill.column(k));
        }
    }
    let mut small = Matrix::zeros(rot.nrows(), r);
    for (dst, &src) in order.iter().enumerate() {
        small.set_column(dst, &rot.column(src));
    }

    let singular = Vector::from_vec(singular);
    if transposed {
        // m^T = cols * Sigma * small^T, so m = small * Sigma * cols^T
        Ok(Svd {
            left: small,
            singular,
            right: cols,
        })
    } else {
        Ok(Svd {
            left: cols,
            singular,
            right: small,
        })
    }
}

fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    let (n, p) = m.shape();
    let mut work = if p > n { m.transpose() } else { m.clone() };
    jacobi_orthogonalize(&mut work, false)?;
    Ok((0..work.ncols()).map(|j| work.column(j).norm()).collect())
}

/// Largest singular value.
pub fn operator_norm(m: &Matrix) -> Result<f64> {
    check_finite(m, "operator_norm input")?;
    Ok(singular_values(m)?.into_iter().fold(0.0f64, f64::max))
}

/// Sum of singular values (trace norm, a.k.a. nuclear norm).
pub fn trace_norm(m: &Matrix) -> Result<f64> {
    check_finite(m, "trace_norm input")?;
    Ok(singular_values(m)?.into_iter().sum())
}

/// Conjugate gradient for `apply(x) = b` with a symmetric positive-definite
/// operator, warm-started from `x0`.
///
/// Returns as soon as `‖apply(x) − b‖ ≤ tol·‖b‖`; in particular an exact warm
/// start returns `x0` after zero iterations. Hitting `max_iter` without
/// convergence is a [`Error::Convergence`] carrying the final relative
/// residual.
pub fn cg_solve<F>(apply: F, b: &Vector, x0: &Vector, tol: f64, max_iter: usize) -> Result<Vector>
where
    F: Fn(&Vector) -> Vector,
{
    cg_solve_preconditioned(apply, b, x0, tol, max_iter, None)
}

/// Conjugate gradient with an optional Jacobi preconditioner given as the
/// diagonal of the operator. Solves the same system as [`cg_solve`] and uses
/// the same stopping rule on the unpreconditioned residual.
pub fn cg_solve_preconditioned<F>(
    apply: F,
    b: &Vector,
    x0: &Vector,
    tol: f64,
    max_iter: usize,
    diag: Option<&Vector>,
) -> Result<Vector>
where
    F: Fn(&Vector) -> Vector,
{
    cg_solve_counted(apply, b, x0, tol, max_iter, diag).map(|out| out.x)
}

/// Outcome of a conjugate-gradient solve with its iteration diagnostics.
#[derive(Debug, Clone)]
pub(crate) struct CgOutcome {
    pub x: Vector,
    pub iterations: usize,
    pub rel_residual: f64,
}

pub(crate) fn cg_solve_counted<F>(
    apply: F,
    b: &Vector,
    x0: &Vector,
    tol: f64,
    max_iter: usize,
    diag: Option<&Vector>,
) -> Result<CgOutcome>
where
    F: Fn(&Vector) -> Vector,
{
    if b.len() != x0.len() {
        return Err(Error::dims(format!(
            "cg_solve rhs has length {} but initial guess has length {}",
            b.len(),
            x0.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("cg_solve tolerance must be > 0"));
    }
    check_finite_vec(b, "cg_solve rhs")?;
    check_finite_vec(x0, "cg_solve initial guess")?;

    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x: Vector::zeros(b.len()),
            iterations: 0,
            rel_residual: 0.0,
        });
    }
    let precond = |r: &Vector| -> Vector {
        match diag {
            Some(d) => Vector::from_fn(r.len(), |i, _| r[i] / d[i].max(f64::MIN_POSITIVE)),
            None => r.clone(),
        }
    };

    let mut x = x0.clone();
    let mut r = b - apply(&x);
    let mut res_norm = r.norm();
    if res_norm <= tol * b_norm {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            rel_residual: res_norm / b_norm,
        });
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 0..max_iter {
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return Err(Error::invalid(format!(
                "cg_solve operator is not positive definite (p^T A p = {pap:.3e})"
            )));
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        res_norm = r.norm();
        if res_norm <= tol * b_norm {
            return Ok(CgOutcome {
                x,
                iterations: it + 1,
                rel_residual: res_norm / b_norm,
            });
        }
        z = precond(&r);
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        p = &z + beta * p;
        rz = rz_new;
    }
    Err(Error::Convergence {
        context: "conjugate gradient".into(),
        iterations: max_iter,
        residual: res_norm / b_norm,
    })
}

/// `(A + μI)^{-1/2}` for a symmetric PSD matrix, computed in the eigenbasis
/// as `U·Diag(1/√(s_k + μ))·U^T`. The shift `μ > 0` keeps the result defined
/// even when `A` is singular.
///
/// Eigenvalues slightly below zero (roundoff) are clamped to zero; anything
/// below `−1e-8·‖A‖_op` is rejected.
pub fn psd_inverse_sqrt(a: &Matrix, mu: f64) -> Result<Matrix> {
    if !(mu > 0.0) {
        return Err(Error::invalid("psd_inverse_sqrt requires mu > 0"));
    }
    let eig = sym_eigen(a)?;
    inverse_sqrt_from_eigen(&eig, mu)
}

/// Same as [`psd_inverse_sqrt`] but reusing an existing eigendecomposition.
pub fn inverse_sqrt_from_eigen(eig: &SymEigen, mu: f64) -> Result<Matrix> {
    if !(mu > 0.0) {
        return Err(Error::invalid("psd_inverse_sqrt requires mu > 0"));
    }
    let op = eig.values.amax();
    let floor = -1e-8 * op.max(f64::MIN_POSITIVE);
    let n = eig.values.len();
    let mut scaled = eig.vectors.clone();
    for k in 0..n {
        let s = eig.values[k];
        if s < floor {
            return Err(Error::invalid(format!(
                "matrix is not positive semidefinite (eigenvalue {s:.3e})"
            )));
        }
        let inv = 1.0 / (s.max(0.0) + mu).sqrt();
        let mut col = scaled.column_mut(k);
        col *= inv;
    }
    Ok(&scaled * eig.vectors.transpose())
}

/// Extends the orthonormal columns of `q` (n × k) to a full basis of R^n and
/// returns the `n × (n−k)` complement.
pub(crate) fn complete_orthonormal_basis(q: &Matrix) -> Matrix {
    let n = q.nrows();
    let k = q.ncols();
    if k >= n {
        return Matrix::zeros(n, 0);
    }
    if k == 0 {
        return Matrix::identity(n, n);
    }
    let mut work = Matrix::zeros(n, k + n);
    work.view_mut((0, 0), (n, k)).copy_from(q);
    work.view_mut((0, k), (n, n)).copy_from(&Matrix::identity(n, n));
    let full_q = work.qr().q();
    // The first k columns of the QR basis span col(q); the rest is the
    // complement we want.
    full_q.columns(k, n - k).into_owned()
}
