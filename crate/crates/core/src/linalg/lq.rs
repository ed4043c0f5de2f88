use super::{ensure_finite_matrix, ensure_finite_slice, DenseMatrix, Vector};
use crate::error::{Error, Result};

/// Block LQ factors of a wide matrix `A = [A1; A2]`:
///
/// ```text
/// [A1]   [L11   0 ] [Q1]
/// [A2] = [L21  L22] [Q2]
/// ```
///
/// `split` is the number of rows in `A1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqFactors {
    pub l11: DenseMatrix,
    pub l21: DenseMatrix,
    pub l22: DenseMatrix,
    pub q1: DenseMatrix,
    pub q2: DenseMatrix,
    pub split: usize,
}

impl LqFactors {
    /// `[L11 Q1; L21 Q1 + L22 Q2]`, i.e. the factored matrix.
    pub fn reassemble(&self) -> DenseMatrix {
        let top = &self.l11 * &self.q1;
        let bottom = &self.l21 * &self.q1 + &self.l22 * &self.q2;
        vstack(&top, &bottom)
    }

    /// The full orthonormal-row factor `[Q1; Q2]`.
    pub fn q(&self) -> DenseMatrix {
        vstack(&self.q1, &self.q2)
    }

    /// The full lower-triangular factor.
    pub fn l(&self) -> DenseMatrix {
        let r1 = self.split;
        let n = r1 + self.l22.nrows();
        let mut l = DenseMatrix::zeros(n, n);
        l.view_mut((0, 0), (r1, r1)).copy_from(&self.l11);
        l.view_mut((r1, 0), (n - r1, r1)).copy_from(&self.l21);
        l.view_mut((r1, r1), (n - r1, n - r1)).copy_from(&self.l22);
        l
    }
}

pub(crate) fn vstack(top: &DenseMatrix, bottom: &DenseMatrix) -> DenseMatrix {
    debug_assert_eq!(top.ncols(), bottom.ncols());
    let mut out = DenseMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    out
}

/// Householder LQ of a wide (or square) matrix, computed as the transpose of
/// a QR factorization of `aᵀ`. Returns `(L, Q)` with `L` square lower
/// triangular with nonnegative diagonal and `Q` having orthonormal rows.
pub(crate) fn householder_lq(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (m, n) = a.shape();
    debug_assert!(m <= n);
    let mut w = a.transpose();
    let mut reflectors: Vec<Option<Vector>> = Vec::with_capacity(m);

    for k in 0..m {
        let norm = w.view((k, k), (n - k, 1)).norm();
        if norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let alpha = if w[(k, k)] >= 0.0 { -norm } else { norm };
        let mut v: Vector = w.view((k, k), (n - k, 1)).column(0).into_owned();
        v[0] -= alpha;
        let vnorm = v.norm();
        v /= vnorm;
        for j in k..m {
            let mut col = w.column_mut(j);
            let mut col = col.rows_mut(k, n - k);
            let s = v.dot(&col);
            col.axpy(-2.0 * s, &v, 1.0);
        }
        reflectors.push(Some(v));
    }

    let mut r = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            r[(i, j)] = w[(i, j)];
        }
    }

    let mut qt = DenseMatrix::zeros(n, m);
    for j in 0..m {
        qt[(j, j)] = 1.0;
    }
    for (k, v) in reflectors.iter().enumerate().rev() {
        let Some(v) = v else { continue };
        for j in 0..m {
            let mut col = qt.column_mut(j);
            let mut col = col.rows_mut(k, n - k);
            let s = v.dot(&col);
            col.axpy(-2.0 * s, v, 1.0);
        }
    }

    let mut l = r.transpose();
    let mut q = qt.transpose();
    for i in 0..m {
        if l[(i, i)] < 0.0 {
            l.column_mut(i).neg_mut();
            q.row_mut(i).neg_mut();
        }
    }
    (l, q)
}

/// Factors `a` as a block LQ decomposition with the first `split` rows in
/// the leading block.
pub fn lq_factor(a: &DenseMatrix, split: usize) -> Result<LqFactors> {
    let (m, n) = a.shape();
    if split == 0 || split >= m {
        return Err(Error::Dimension(format!("split {split} must lie in 1..{m} for a matrix with {m} rows")));
    }
    if n < m {
        return Err(Error::Dimension(format!("LQ needs a wide or square matrix, got {m}x{n}")));
    }
    ensure_finite_matrix(a, "matrix")?;

    let (l, q) = householder_lq(a);
    if l.iter().chain(q.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("LQ factorization overflowed".into()));
    }
    let r2 = m - split;
    Ok(LqFactors {
        l11: l.view((0, 0), (split, split)).into_owned(),
        l21: l.view((split, 0), (r2, split)).into_owned(),
        l22: l.view((split, split), (r2, r2)).into_owned(),
        q1: q.view((0, 0), (split, n)).into_owned(),
        q2: q.view((split, 0), (r2, n)).into_owned(),
        split,
    })
}

/// Drops the `L22 Q2` term: `A* = [L11 Q1; L21 Q1]`, of rank at most `split`.
pub fn truncate_lq(f: &LqFactors) -> DenseMatrix {
    let top = &f.l11 * &f.q1;
    let bottom = &f.l21 * &f.q1;
    vstack(&top, &bottom)
}

/// Projects `extra_row` onto the row space of `data` through the truncated
/// LQ of `[data; extra_row]`, returning `L21 Q1`.
pub fn project_onto_rows(data: &DenseMatrix, extra_row: &Vector) -> Result<Vector> {
    let (m, n) = data.shape();
    if extra_row.len() != n {
        return Err(Error::Dimension(format!("row of length {} does not match {n} data columns", extra_row.len())));
    }
    if n < m + 1 {
        return Err(Error::Dimension(format!("projection needs more columns than rows + 1, got {m}x{n}")));
    }
    ensure_finite_slice(extra_row.as_slice(), "projected row")?;
    let row = DenseMatrix::from_row_slice(1, n, extra_row.as_slice());
    let stacked = vstack(data, &row);
    let f = lq_factor(&stacked, m)?;
    Ok((&f.l21 * &f.q1).row(0).transpose())
}
