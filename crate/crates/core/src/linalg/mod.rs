//! Dense linear-algebra kernel.
//!
//! Matrices are [`nalgebra::DMatrix<f64>`]; every entry point checks its
//! inputs for non-finite values before doing any work.

mod lq;
mod rank;
mod solve;

pub use lq::{lq_factor, project_onto_rows, truncate_lq, LqFactors};
pub use rank::{default_rank_tol, numerical_rank, singular_values};
pub use solve::{
    lasso_objective, solve, solve_lasso, solve_min_norm, solve_ridge, LassoSolution, Solution, SolveMode, SolveOptions,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub(crate) fn ensure_finite_matrix(a: &DenseMatrix, what: &str) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Dimension(format!("{what} is empty")));
    }
    if let Some(pos) = a.iter().position(|v| !v.is_finite()) {
        let (r, c) = (pos % a.nrows(), pos / a.nrows());
        return Err(Error::NonFinite(format!("{what} entry ({r}, {c})")));
    }
    Ok(())
}

pub(crate) fn ensure_finite_slice(v: &[f64], what: &str) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!("{what} entry {i}"))),
        None => Ok(()),
    }
}

/// Solves `l x = b` for lower-triangular `l`.
pub(crate) fn forward_substitute(l: &DenseMatrix, b: &Vector) -> Vector {
    let n = l.nrows();
    let mut x = Vector::zeros(n);
    for i in 0..n {
        let mut acc = b[i];
        for j in 0..i {
            acc -= l[(i, j)] * x[j];
        }
        x[i] = acc / l[(i, i)];
    }
    x
}

/// Solves `u x = b` for upper-triangular `u`.
pub(crate) fn back_substitute(u: &DenseMatrix, b: &Vector) -> Vector {
    let n = u.nrows();
    let mut x = Vector::zeros(n);
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= u[(i, j)] * x[j];
        }
        x[i] = acc / u[(i, i)];
    }
    x
}
