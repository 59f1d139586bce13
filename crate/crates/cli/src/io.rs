//! CSV interchange. All numeric output uses 17 significant digits so values
//! round-trip exactly through text.

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use tracelasso::perturbation::ResidualRow;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Decimal text with 17 significant digits: parses back to the same f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str, path: &Path, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().with_context(|| {
        format!(
            "{}:{}: cannot parse '{}' as a number",
            path.display(),
            line + 1,
            field.trim()
        )
    })
}

/// Reads a headerless numeric CSV, one row per line.
pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|field| parse_f64(field, path, i))
            .collect();
        let row = row?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                bail!(
                    "{}:{}: row has {} fields, expected {}",
                    path.display(),
                    i + 1,
                    row.len(),
                    first.len()
                );
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    let (n, p) = (rows.len(), rows[0].len());
    Ok(Matrix::from_fn(n, p, |i, j| rows[i][j]))
}

/// Reads a vector: one value per line (or a single CSV column).
pub fn read_vector_csv(path: &Path) -> Result<Vector> {
    let m = read_matrix_csv(path)?;
    if m.ncols() != 1 {
        bail!(
            "{}: expected a single column, found {}",
            path.display(),
            m.ncols()
        );
    }
    Ok(m.column(0).into_owned())
}

pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(path, &out)
}

pub fn write_vector_csv(path: &Path, v: &Vector) -> Result<()> {
    let mut out = String::new();
    for x in v.iter() {
        out.push_str(&fmt_f64(*x));
        out.push('\n');
    }
    write_atomic(path, &out)
}

/// Coefficients as `index,coefficient` (0-based indices).
pub fn write_coefficients_csv(path: &Path, w: &Vector) -> Result<()> {
    let mut out = String::from("index,coefficient\n");
    for (i, x) in w.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", fmt_f64(*x));
    }
    write_atomic(path, &out)
}

pub fn read_coefficients_csv(path: &Path) -> Result<Vector> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue; // header
        }
        let mut fields = line.split(',');
        let _index = fields.next();
        let value = fields
            .next()
            .with_context(|| format!("{}:{}: missing coefficient", path.display(), i + 1))?;
        values.push(parse_f64(value, path, i)?);
    }
    Ok(Vector::from_vec(values))
}

/// Unit-ball boundary points as `w1,w2,w3`.
pub fn write_ball_csv(path: &Path, points: &[[f64; 3]]) -> Result<()> {
    let mut out = String::from("w1,w2,w3\n");
    for pt in points {
        let _ = writeln!(out, "{},{},{}", fmt_f64(pt[0]), fmt_f64(pt[1]), fmt_f64(pt[2]));
    }
    write_atomic(path, &out)
}

pub fn read_ball_csv(path: &Path) -> Result<Vec<[f64; 3]>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            bail!("{}:{}: expected 3 fields", path.display(), i + 1);
        }
        points.push([
            parse_f64(fields[0], path, i)?,
            parse_f64(fields[1], path, i)?,
            parse_f64(fields[2], path, i)?,
        ]);
    }
    Ok(points)
}

/// Expansion residuals as `t,residual,residual_over_t2`.
pub fn write_residual_report_csv(path: &Path, rows: &[ResidualRow]) -> Result<()> {
    let mut out = String::from("t,residual,residual_over_t2\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(row.t),
            fmt_f64(row.residual),
            fmt_f64(row.residual_over_t2)
        );
    }
    write_atomic(path, &out)
}

/// Path summary as `lambda,objective,iterations,converged`.
pub fn write_path_csv(path: &Path, lambdas: &[f64], rows: &[(f64, usize, bool)]) -> Result<()> {
    let mut out = String::from("lambda,objective,iterations,converged\n");
    for (lam, (objective, iterations, converged)) in lambdas.iter().zip(rows) {
        let _ = writeln!(
            out,
            "{},{},{iterations},{converged}",
            fmt_f64(*lam),
            fmt_f64(*objective)
        );
    }
    write_atomic(path, &out)
}

/// Path coefficients in long form: `lambda,index,coefficient`.
pub fn write_path_coefficients_csv(
    path: &Path,
    lambdas: &[f64],
    solutions: &[Vector],
) -> Result<()> {
    let mut out = String::from("lambda,index,coefficient\n");
    for (lam, w) in lambdas.iter().zip(solutions) {
        for (i, x) in w.iter().enumerate() {
            let _ = writeln!(out, "{},{i},{}", fmt_f64(*lam), fmt_f64(*x));
        }
    }
    write_atomic(path, &out)
}

/// Sidecar metadata as `key,value` rows.
pub fn write_meta_csv(path: &Path, pairs: &[(&str, String)]) -> Result<()> {
    let mut out = String::from("key,value\n");
    for (key, value) in pairs {
        let _ = writeln!(out, "{key},{value}");
    }
    write_atomic(path, &out)
}

pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}
