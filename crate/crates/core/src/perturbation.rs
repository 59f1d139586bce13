//! Second-order expansions of the trace norm under additive perturbations.
//!
//! [`trace_norm_expansion`] evaluates, for `M` with SVD `U·Diag(s)·V^T` and a
//! perturbation `Δ` with `‖Δ‖_op < s_r/4`,
//!
//! ```text
//! ‖M + Δ‖_* ≈ ‖M‖_* + tr(V U^T Δ) + Σ_{s_j,s_k>0} (u_j^T Δ v_k − u_k^T Δ v_j)²/(4(s_j+s_k))
//!           + Σ_{s_j=0} Σ_{s_k>0} [(u_k^T Δ v_0j)² + (u_0j^T Δ v_k)²]/(2 s_k) + ‖Q‖_*
//! ```
//!
//! with a remainder of order `‖Δ‖³`. `U_0`, `V_0` are orthonormal bases of
//! the left/right null spaces and `Q` collects the perturbation of the zero
//! singular values:
//!
//! ```text
//! Q = P_U0·Δ·P_V0 − P_U0·Δ·P_V0·Δ^T·G − G·Δ^T·P_U0·Δ·P_V0 − P_U0·Δ·M^+·Δ·P_V0,
//! ```
//!
//! where `P_U0`, `P_V0` are the null-space projectors, `M^+` the
//! pseudo-inverse and `G = (M^+)^T`. For full-rank `M` the `Q` term and the
//! zero-value sum vanish.
//!
//! [`lasso_neighborhood_expansion`] is the same expansion specialized to
//! `(I + Δ)·Diag(w)` for symmetric `Δ`, i.e. the penalty near an
//! uncorrelated design, where it collapses to a weighted coupling of the
//! coefficient magnitudes.

use crate::error::{Error, Result};
use crate::linalg::{self, complete_orthonormal_basis};
use crate::{Matrix, Vector};

/// Singular values at or below `RANK_TOL_REL·s_max` are treated as zero.
pub const RANK_TOL_REL: f64 = 1e-10;

/// Terms of the second-order trace-norm expansion. `total` is their sum.
#[derive(Debug, Clone)]
pub struct ExpansionResult {
    /// `‖M‖_*`.
    pub zeroth: f64,
    /// Linear term `tr(V U^T Δ)`.
    pub first: f64,
    /// The two quadratic double sums over positive singular values.
    pub second: f64,
    /// `‖Q‖_*`: the (nonsmooth) contribution of the zero singular values.
    pub q_term: f64,
    pub total: f64,
}

/// SVD split into strictly positive singular values and null-space bases.
#[derive(Debug, Clone)]
pub struct SvdParts {
    pub u_pos: Matrix,
    pub s_pos: Vec<f64>,
    pub v_pos: Matrix,
    pub u_null: Matrix,
    pub v_null: Matrix,
}

/// Computes the SVD of `m` and splits it at the relative rank tolerance.
pub fn svd_parts(m: &Matrix) -> Result<SvdParts> {
    let svd = linalg::svd(m)?;
    let s_max = svd.singular.iter().cloned().fold(0.0f64, f64::max);
    let rank = svd
        .singular
        .iter()
        .take_while(|&&s| s > RANK_TOL_REL * s_max && s > 0.0)
        .count();
    let u_pos = svd.left.columns(0, rank).into_owned();
    let v_pos = svd.right.columns(0, rank).into_owned();
    let s_pos: Vec<f64> = svd.singular.iter().take(rank).cloned().collect();
    let u_null = complete_orthonormal_basis(&u_pos);
    let v_null = complete_orthonormal_basis(&v_pos);
    Ok(SvdParts {
        u_pos,
        s_pos,
        v_pos,
        u_null,
        v_null,
    })
}

/// Second-order expansion of `‖M + Δ‖_*` around `M`.
///
/// Requires `‖Δ‖_op < s_r/4` with `s_r` the smallest strictly positive
/// singular value of `M` (checked; violations are a domain error). For a
/// zero `M` the expansion is exact: `total = ‖Δ‖_*`.
pub fn trace_norm_expansion(m: &Matrix, delta: &Matrix) -> Result<ExpansionResult> {
    if m.shape() != delta.shape() {
        return Err(Error::dims(format!(
            "perturbation is {}x{} but the matrix is {}x{}",
            delta.nrows(),
            delta.ncols(),
            m.nrows(),
            m.ncols()
        )));
    }
    let parts = svd_parts(m)?;
    check_domain(&parts, delta)?;
    Ok(expansion_from_parts(&parts, delta))
}

fn check_domain(parts: &SvdParts, delta: &Matrix) -> Result<()> {
    if let Some(&s_r) = parts.s_pos.last() {
        let delta_op = linalg::operator_norm(delta)?;
        if delta_op >= s_r / 4.0 {
            return Err(Error::Domain(format!(
                "expansion needs ||Delta||_op < s_r/4 = {:.6e}, got {:.6e}",
                s_r / 4.0,
                delta_op
            )));
        }
    }
    Ok(())
}

/// The expansion evaluated for a given SVD split. All terms are invariant
/// under re-basing of degenerate singular-value blocks and of the null
/// spaces, so any valid split gives the same value.
pub fn expansion_from_parts(parts: &SvdParts, delta: &Matrix) -> ExpansionResult {
    let r = parts.s_pos.len();
    let zeroth: f64 = parts.s_pos.iter().sum();

    // B = U^T Δ V over the positive part
    let b = parts.u_pos.transpose() * delta * &parts.v_pos;
    let first = (0..r).map(|j| b[(j, j)]).sum::<f64>();

    let mut second = 0.0;
    for j in 0..r {
        for k in 0..r {
            let num = b[(j, k)] - b[(k, j)];
            second += num * num / (4.0 * (parts.s_pos[j] + parts.s_pos[k]));
        }
    }
    // cross terms between the positive part and the null spaces
    if parts.v_null.ncols() > 0 {
        let c = parts.u_pos.transpose() * delta * &parts.v_null; // r x (p-r)
        for k in 0..r {
            let row_sq: f64 = c.row(k).iter().map(|x| x * x).sum();
            second += row_sq / (2.0 * parts.s_pos[k]);
        }
    }
    if parts.u_null.ncols() > 0 {
        let c = parts.u_null.transpose() * delta * &parts.v_pos; // (n-r) x r
        for k in 0..r {
            let col_sq: f64 = c.column(k).iter().map(|x| x * x).sum();
            second += col_sq / (2.0 * parts.s_pos[k]);
        }
    }

    let q_term = if parts.u_null.ncols() == 0 || parts.v_null.ncols() == 0 {
        0.0
    } else {
        // A = P_U0 Δ P_V0, pseudo-inverse transpose G = U Diag(1/s) V^T
        let a = &parts.u_null * (parts.u_null.transpose() * delta * &parts.v_null)
            * parts.v_null.transpose();
        let q = if r == 0 {
            a
        } else {
            let mut u_scaled = parts.u_pos.clone();
            for k in 0..r {
                let mut col = u_scaled.column_mut(k);
                col /= parts.s_pos[k];
            }
            let g = &u_scaled * parts.v_pos.transpose(); // (M^+)^T, n x p
            let pinv = g.transpose(); // M^+, p x n
            &a - &a * delta.transpose() * &g
                - &g * delta.transpose() * &a
                - &parts.u_null
                    * (parts.u_null.transpose() * delta * &pinv * delta * &parts.v_null)
                    * parts.v_null.transpose()
        };
        linalg::trace_norm(&q).expect("finite by construction")
    };

    let total = zeroth + first + second + q_term;
    ExpansionResult {
        zeroth,
        first,
        second,
        q_term,
        total,
    }
}

/// Second-order expansion of `‖(I + Δ)·Diag(w)‖_*` for symmetric `Δ`:
///
/// ```text
/// ‖w‖₁ + diag(Δ)^T|w| + Σ_{i,j} Δ_ij²·(|w_i| − |w_j|)²/(4(|w_i| + |w_j|))
/// ```
///
/// with the convention that a term is zero when `w_i = w_j = 0`.
pub fn lasso_neighborhood_expansion(w: &Vector, delta: &Matrix) -> Result<f64> {
    let p = w.len();
    if delta.nrows() != p || delta.ncols() != p {
        return Err(Error::dims(format!(
            "perturbation is {}x{} but w has length {p}",
            delta.nrows(),
            delta.ncols()
        )));
    }
    linalg::check_finite(delta, "perturbation")?;
    linalg::check_finite_vec(w, "coefficient vector")?;
    let scale = delta.amax();
    let mut asym: f64 = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            asym = asym.max((delta[(i, j)] - delta[(j, i)]).abs());
        }
    }
    if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::invalid(
            "lasso_neighborhood_expansion requires a symmetric perturbation",
        ));
    }

    let abs_w: Vec<f64> = w.iter().map(|v| v.abs()).collect();
    let mut value: f64 = abs_w.iter().sum();
    for i in 0..p {
        value += delta[(i, i)] * abs_w[i];
    }
    for i in 0..p {
        for j in 0..p {
            if abs_w[i] == 0.0 && abs_w[j] == 0.0 {
                continue;
            }
            let diff = abs_w[i] - abs_w[j];
            value += delta[(i, j)] * delta[(i, j)] * diff * diff
                / (4.0 * (abs_w[i] + abs_w[j]));
        }
    }
    Ok(value)
}

/// One row of [`expansion_residual_report`].
#[derive(Debug, Clone)]
pub struct ResidualRow {
    pub t: f64,
    /// `|‖M + tΔ‖_* − expansion(tΔ)|`.
    pub residual: f64,
    /// `residual / t²` (zero at `t = 0`); shrinks with `t` since the
    /// remainder is third order.
    pub residual_over_t2: f64,
}

/// Residuals of the expansion against the directly computed trace norm over
/// a grid of scales `t`. Every `t` must satisfy the domain condition.
pub fn expansion_residual_report(
    m: &Matrix,
    delta: &Matrix,
    t_grid: &[f64],
) -> Result<Vec<ResidualRow>> {
    if m.shape() != delta.shape() {
        return Err(Error::dims(format!(
            "perturbation is {}x{} but the matrix is {}x{}",
            delta.nrows(),
            delta.ncols(),
            m.nrows(),
            m.ncols()
        )));
    }
    let parts = svd_parts(m)?;
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::invalid(format!("invalid grid value t = {t}")));
        }
        let scaled = t * delta;
        check_domain(&parts, &scaled)?;
        let expansion = expansion_from_parts(&parts, &scaled);
        let direct = linalg::trace_norm(&(m + scaled))?;
        let residual = (direct - expansion.total).abs();
        let residual_over_t2 = if t == 0.0 { 0.0 } else { residual / (t * t) };
        rows.push(ResidualRow {
            t,
            residual,
            residual_over_t2,
        });
    }
    Ok(rows)
}
