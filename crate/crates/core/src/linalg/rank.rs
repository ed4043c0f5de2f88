use super::DenseMatrix;

/// Singular values in nonincreasing order.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// `max(rows, cols) * machine epsilon`.
pub fn default_rank_tol(a: &DenseMatrix) -> f64 {
    a.nrows().max(a.ncols()) as f64 * f64::EPSILON
}

/// Number of singular values strictly above `tol` times the largest one.
pub fn numerical_rank(a: &DenseMatrix, tol: f64) -> usize {
    debug_assert!(tol > 0.0 && tol < 1.0, "relative rank tolerance out of range: {tol}");
    let s = singular_values(a);
    let Some(&top) = s.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > tol * top).count()
}
