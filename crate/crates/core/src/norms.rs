//! The `Ω_P` penalty family: `Ω_P(w) = ‖P·Diag(w)‖_*` for a matrix `P` with
//! unit-norm columns.
//!
//! Special cases: `P = I` gives the ℓ1 norm, all columns identical gives the
//! ℓ2 norm, the block matrix of [`group_lasso_matrix`] gives the group-Lasso
//! norm, and `P = X` (normalized design) gives the trace Lasso. The norm only
//! depends on the Gram matrix `P^T·P`, so a penalty can equivalently be
//! specified by a PSD matrix with unit diagonal.

use crate::error::{Error, Result};
use crate::linalg::{self, scale_columns};
use crate::{Matrix, Vector};
use rand::prelude::*;
use rand_distr::StandardNormal;

/// How far column norms (explicit form) or diagonal entries (Gram form) may
/// deviate from 1.
pub const UNIT_COLUMN_TOL: f64 = 1e-8;

/// Eigenvalues of a Gram matrix in `[-PSD_CLIP_TOL·‖G‖_op, 0)` are clipped to
/// zero; anything lower is rejected.
pub const PSD_CLIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
enum PenaltyForm {
    /// Explicit `k × p` matrix with unit-norm columns.
    Explicit { p: Matrix },
    /// Gram matrix `G = P^T·P` with its cached square root `G^{1/2}`.
    Gram { g: Matrix, sqrt: Matrix },
}

/// A penalty matrix defining `Ω_P`, either explicit or in Gram form.
///
/// The Gram form computes `G^{1/2}` once at construction and reuses it for
/// every evaluation, so repeated calls along a regularization path pay the
/// eigendecomposition only once.
#[derive(Debug, Clone)]
pub struct PenaltyMatrix {
    form: PenaltyForm,
    rows: usize,
    cols: usize,
}

impl PenaltyMatrix {
    /// Wraps an explicit `k × p` matrix; every column must have unit ℓ2 norm
    /// within [`UNIT_COLUMN_TOL`].
    pub fn explicit(p: Matrix) -> Result<Self> {
        if p.nrows() == 0 || p.ncols() == 0 {
            return Err(Error::invalid("penalty matrix must be nonempty"));
        }
        linalg::check_finite(&p, "penalty matrix")?;
        for j in 0..p.ncols() {
            let norm = p.column(j).norm();
            if (norm - 1.0).abs() > UNIT_COLUMN_TOL {
                return Err(Error::invalid(format!(
                    "penalty matrix column {j} has norm {norm:.12}, expected 1"
                )));
            }
        }
        let (rows, cols) = (p.nrows(), p.ncols());
        Ok(Self {
            form: PenaltyForm::Explicit { p },
            rows,
            cols,
        })
    }

    /// Wraps a Gram matrix `G = P^T·P`: symmetric PSD with unit diagonal.
    /// Slightly negative eigenvalues (roundoff) are clipped to zero.
    pub fn gram(g: Matrix) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(Error::dims(format!(
                "gram matrix must be square, got {}x{}",
                g.nrows(),
                g.ncols()
            )));
        }
        for i in 0..g.nrows() {
            if (g[(i, i)] - 1.0).abs() > UNIT_COLUMN_TOL {
                return Err(Error::invalid(format!(
                    "gram matrix diagonal entry {i} is {:.12}, expected 1",
                    g[(i, i)]
                )));
            }
        }
        let eig = linalg::sym_eigen(&g)?;
        let op = eig.values.amax();
        // numerical-rank floor: eigenvalues at roundoff level would turn
        // into O(sqrt(eps)) noise under the square root
        let floor = g.nrows() as f64 * f64::EPSILON * op.max(1.0);
        let mut scaled = eig.vectors.clone();
        for k in 0..eig.values.len() {
            let v = eig.values[k];
            if v < -PSD_CLIP_TOL * op.max(1.0) {
                return Err(Error::invalid(format!(
                    "gram matrix is not positive semidefinite (eigenvalue {v:.3e})"
                )));
            }
            let clipped = if v <= floor { 0.0 } else { v };
            let mut col = scaled.column_mut(k);
            col *= clipped.sqrt();
        }
        let sqrt = &scaled * eig.vectors.transpose();
        let n = g.nrows();
        Ok(Self {
            form: PenaltyForm::Gram { g, sqrt },
            rows: n,
            cols: n,
        })
    }

    /// `(k, p)` dimensions; the Gram form reports `(p, p)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of coefficients the penalty applies to.
    pub fn p(&self) -> usize {
        self.cols
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self.form, PenaltyForm::Explicit { .. })
    }

    /// The Gram matrix itself, when this penalty is in Gram form.
    pub fn gram_matrix(&self) -> Option<&Matrix> {
        match &self.form {
            PenaltyForm::Gram { g, .. } => Some(g),
            PenaltyForm::Explicit { .. } => None,
        }
    }

    /// Converts an explicit penalty to its Gram form (`G = P^T·P`).
    pub fn to_gram(&self) -> Result<Self> {
        match &self.form {
            PenaltyForm::Explicit { p } => {
                let mut g = p.transpose() * p;
                g = (&g + g.transpose()) * 0.5;
                // the diagonal is exactly the squared column norms; snap it to
                // 1 so unit-column roundoff cannot fail the Gram validation
                for i in 0..g.nrows() {
                    g[(i, i)] = 1.0;
                }
                Self::gram(g)
            }
            PenaltyForm::Gram { .. } => Ok(self.clone()),
        }
    }

    /// The matrix `F` such that `Ω_P(w) = ‖F·Diag(w)‖_*`: the explicit `P`
    /// itself or the cached `G^{1/2}`.
    fn factor(&self) -> &Matrix {
        match &self.form {
            PenaltyForm::Explicit { p } => p,
            PenaltyForm::Gram { sqrt, .. } => sqrt,
        }
    }

    fn check_len(&self, w: &Vector, what: &str) -> Result<()> {
        if w.len() != self.cols {
            return Err(Error::dims(format!(
                "{what} has length {} but penalty has {} columns",
                w.len(),
                self.cols
            )));
        }
        Ok(())
    }
}

/// Evaluates `Ω_P(w) = ‖P·Diag(w)‖_*` (Gram form: `‖G^{1/2}·Diag(w)‖_*`).
pub fn omega(penalty: &PenaltyMatrix, w: &Vector) -> Result<f64> {
    penalty.check_len(w, "coefficient vector")?;
    linalg::check_finite_vec(w, "coefficient vector")?;
    linalg::trace_norm(&scale_columns(penalty.factor(), w))
}

/// Evaluates an explicit penalty through its Gram matrix. Equal to
/// [`omega`] because the norm only depends on `P^T·P`.
pub fn omega_gram_equivalent(penalty: &PenaltyMatrix, w: &Vector) -> Result<f64> {
    if !penalty.is_explicit() {
        return Err(Error::invalid(
            "omega_gram_equivalent expects the explicit form",
        ));
    }
    omega(&penalty.to_gram()?, w)
}

/// The trace Lasso penalty `‖X'·Diag(w)‖_*` where `X'` is `X` with columns
/// rescaled to unit norm when `normalize` is set, and the raw `X` otherwise.
pub fn trace_lasso(x: &Matrix, w: &Vector, normalize: bool) -> Result<f64> {
    if w.len() != x.ncols() {
        return Err(Error::dims(format!(
            "coefficient vector has length {} but design has {} columns",
            w.len(),
            x.ncols()
        )));
    }
    linalg::check_finite(x, "design matrix")?;
    linalg::check_finite_vec(w, "coefficient vector")?;
    if normalize {
        let mut scaled = Vector::zeros(w.len());
        for j in 0..x.ncols() {
            let norm = x.column(j).norm();
            if norm == 0.0 {
                return Err(Error::invalid(format!(
                    "cannot normalize design column {j} with zero norm"
                )));
            }
            scaled[j] = w[j] / norm;
        }
        linalg::trace_norm(&scale_columns(x, &scaled))
    } else {
        linalg::trace_norm(&scale_columns(x, w))
    }
}

/// Upper bound on the dual norm: `Ω_P^*(u) ≤ ‖P·Diag(u)‖_op`.
pub fn dual_norm_upper(penalty: &PenaltyMatrix, u: &Vector) -> Result<f64> {
    penalty.check_len(u, "dual vector")?;
    linalg::check_finite_vec(u, "dual vector")?;
    linalg::operator_norm(&scale_columns(penalty.factor(), u))
}

/// Empirical lower bound on the dual norm: the maximum of `u^T·v / Ω_P(v)`
/// over the canonical directions, `u` itself, and `trials` random Gaussian
/// directions drawn from the given seed. Always at most the true dual norm.
pub fn dual_norm_lower_estimate(
    penalty: &PenaltyMatrix,
    u: &Vector,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    penalty.check_len(u, "dual vector")?;
    linalg::check_finite_vec(u, "dual vector")?;
    if trials < 1 {
        return Err(Error::invalid("dual_norm_lower_estimate needs trials >= 1"));
    }
    let p = penalty.p();
    let mut best: f64 = 0.0;
    let mut consider = |v: &Vector| -> Result<()> {
        if v.iter().all(|x| *x == 0.0) {
            return Ok(());
        }
        let denom = omega(penalty, v)?;
        if denom > 0.0 {
            best = best.max(u.dot(v).abs() / denom);
        }
        Ok(())
    };
    for i in 0..p {
        let mut e = Vector::zeros(p);
        e[i] = 1.0;
        consider(&e)?;
    }
    consider(u)?;
    let mut rng = crate::datagen::stream_rng(seed, "dual-lower");
    for _ in 0..trials {
        let v = Vector::from_fn(p, |_, _| rng.sample(StandardNormal));
        consider(&v)?;
    }
    Ok(best)
}

/// A partition of `{0, …, p−1}` into disjoint nonempty groups.
#[derive(Debug, Clone)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
    p: usize,
}

impl GroupPartition {
    /// Validates that the groups are nonempty, disjoint and cover `0..p`.
    pub fn new(groups: Vec<Vec<usize>>, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("partition dimension must be >= 1"));
        }
        let mut seen = vec![false; p];
        for (gi, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::invalid(format!("group {gi} is empty")));
            }
            for &idx in group {
                if idx >= p {
                    return Err(Error::invalid(format!(
                        "group {gi} contains index {idx} out of range for p = {p}"
                    )));
                }
                if seen[idx] {
                    return Err(Error::invalid(format!(
                        "index {idx} appears in more than one group"
                    )));
                }
                seen[idx] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::invalid("groups do not cover all indices"));
        }
        Ok(Self { groups, p })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn p(&self) -> usize {
        self.p
    }
}

/// The `p × p` matrix `P^GL` with entries `1/√|S|` for index pairs inside the
/// same group `S` and 0 elsewhere; `Ω_{P^GL}` is exactly the group-Lasso norm.
pub fn group_lasso_matrix(partition: &GroupPartition) -> Result<PenaltyMatrix> {
    let p = partition.p();
    let mut m = Matrix::zeros(p, p);
    for group in partition.groups() {
        let val = 1.0 / (group.len() as f64).sqrt();
        for &i in group {
            for &j in group {
                m[(i, j)] = val;
            }
        }
    }
    PenaltyMatrix::explicit(m)
}

/// The group-Lasso norm `Σ_S ‖w_S‖_2` for a partition, evaluated directly.
pub fn group_lasso_norm(partition: &GroupPartition, w: &Vector) -> Result<f64> {
    if w.len() != partition.p() {
        return Err(Error::dims(format!(
            "coefficient vector has length {} but partition covers {}",
            w.len(),
            partition.p()
        )));
    }
    Ok(partition
        .groups()
        .iter()
        .map(|g| g.iter().map(|&i| w[i] * w[i]).sum::<f64>().sqrt())
        .sum())
}

/// Boundary points `w/Ω_P(w)` of the unit ball of a 3-dimensional penalty,
/// sampled over an inclusive latitude/longitude sphere grid plus the six
/// signed canonical directions. Every returned point has `Ω_P = 1` up to
/// floating-point error.
pub fn unit_ball_slice(penalty: &PenaltyMatrix, resolution: usize) -> Result<Vec<[f64; 3]>> {
    if penalty.p() != 3 {
        return Err(Error::dims(format!(
            "unit_ball_slice expects a 3-dimensional penalty, got p = {}",
            penalty.p()
        )));
    }
    if resolution < 2 {
        return Err(Error::invalid("unit_ball_slice needs resolution >= 2"));
    }
    let mut dirs: Vec<[f64; 3]> = Vec::new();
    for i in 0..=resolution {
        let theta = std::f64::consts::PI * i as f64 / resolution as f64;
        let (st, ct) = theta.sin_cos();
        let n_phi = if i == 0 || i == resolution { 1 } else { 2 * resolution };
        for j in 0..n_phi {
            let phi = std::f64::consts::TAU * j as f64 / (2 * resolution) as f64;
            dirs.push([st * phi.cos(), st * phi.sin(), ct]);
        }
    }
    for a in 0..3 {
        for sign in [1.0, -1.0] {
            let mut e = [0.0; 3];
            e[a] = sign;
            dirs.push(e);
        }
    }
    let mut points = Vec::with_capacity(dirs.len());
    for d in dirs {
        let v = Vector::from_row_slice(&d);
        let norm = omega(penalty, &v)?;
        points.push([d[0] / norm, d[1] / norm, d[2] / norm]);
    }
    Ok(points)
}
