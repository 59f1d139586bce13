//! Built-in 3×3 Gram matrices for the unit-ball command, covering the three
//! qualitative correlation regimes.

use crate::io::Matrix;

/// Preset Gram matrices:
///
/// 1. one strongly correlated pair (0.9) weakly tied to the third variable,
/// 2. a correlation chain (0.7 between neighbors, 0.49 across),
/// 3. a perfectly correlated pair plus an independent variable; the unit
///    ball of this one coincides with the group-Lasso ball for `{0,1},{2}`.
pub fn gram_preset(index: usize) -> Option<Matrix> {
    let entries: &[f64] = match index {
        1 => &[1.0, 0.9, 0.1, 0.9, 1.0, 0.1, 0.1, 0.1, 1.0],
        2 => &[1.0, 0.7, 0.49, 0.7, 1.0, 0.7, 0.49, 0.7, 1.0],
        3 => &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        _ => return None,
    };
    Some(Matrix::from_row_slice(3, 3, entries))
}
