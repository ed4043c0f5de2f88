//! Hankel and extended Hankel matrices, the one-step prediction blocks and
//! the rank test for identifiability.
//!
//! Time is 1-based in the documentation and 0-based in the code. A basis
//! function needs `ℓ` past samples, so transformed series only exist for
//! `t = ℓ+1..T`; every block built here is restricted to that range so that
//! all rows of one column describe the same time window.

use std::ops::Range;

use serde::Serialize;

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::linalg::{default_rank_tol, numerical_rank, project_onto_rows, DenseMatrix, Vector};
use crate::trajectory::Trajectory;

/// `l × (T−l+1)` Hankel matrix with entry `(i, j) = w(i+j−1)`.
pub fn hankel(w: &[f64], l: usize) -> Result<DenseMatrix> {
    if l == 0 {
        return Err(Error::InvalidArgument("Hankel depth must be at least 1".into()));
    }
    if w.len() < l {
        return Err(Error::InsufficientData(format!("series of length {} is shorter than depth {l}", w.len())));
    }
    let cols = w.len() - l + 1;
    Ok(DenseMatrix::from_fn(l, cols, |i, j| w[i + j]))
}

/// Transformed series `s_k(t) = φ^k(x_y(t), x_u(t))` for `t = ℓ+1..T`, one
/// vector per basis expression.
pub fn transformed_series(traj: &Trajectory, ell: usize, basis: &BasisSet) -> Result<Vec<Vec<f64>>> {
    basis.check_lag(ell)?;
    let t = traj.len();
    if t <= ell {
        return Err(Error::InsufficientData(format!("trajectory of length {t} has no samples past lag {ell}")));
    }
    let (u, y) = (traj.u(), traj.y());
    let mut series = vec![Vec::with_capacity(t - ell); basis.len()];
    for c in 0..t - ell {
        let x_y = &y[c..c + ell];
        let x_u = &u[c..=c + ell];
        for (k, e) in basis.exprs().iter().enumerate() {
            let v = e.eval(x_y, x_u).map_err(|err| match err {
                Error::NonFinite(msg) => Error::NonFinite(format!("t = {}: {msg}", c + ell + 1)),
                other => other,
            })?;
            series[k].push(v);
        }
    }
    Ok(series)
}

/// Extended Hankel matrix `[H_l(u); H_l(y); H_l(s_1); …; H_l(s_K)]` over
/// `t = ℓ+1..T`, with `(2+K)·l` rows and `T−ℓ−l+1` columns.
pub fn extended_hankel(traj: &Trajectory, l: usize, ell: usize, basis: &BasisSet) -> Result<DenseMatrix> {
    let t = traj.len();
    if t < ell + l.max(1) {
        return Err(Error::InsufficientData(format!(
            "need at least {} samples for depth {l} at lag {ell}, got {t}",
            ell + l
        )));
    }
    let series = transformed_series(traj, ell, basis)?;
    let mut blocks = Vec::with_capacity(2 + basis.len());
    blocks.push(hankel(&traj.u()[ell..], l)?);
    blocks.push(hankel(&traj.y()[ell..], l)?);
    for s in &series {
        blocks.push(hankel(s, l)?);
    }
    let cols = blocks[0].ncols();
    let mut out = DenseMatrix::zeros(blocks.len() * l, cols);
    for (b, block) in blocks.iter().enumerate() {
        out.view_mut((b * l, 0), (l, cols)).copy_from(block);
    }
    Ok(out)
}

/// Row ranges of the one-step data matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowLayout {
    pub u_past: Range<usize>,
    pub y_past: Range<usize>,
    pub u_current: usize,
    pub phi: Range<usize>,
}

impl RowLayout {
    pub fn new(ell: usize, k: usize) -> Self {
        RowLayout { u_past: 0..ell, y_past: ell..2 * ell, u_current: 2 * ell, phi: 2 * ell + 1..2 * ell + 1 + k }
    }

    pub fn rows(&self) -> usize {
        self.phi.end
    }
}

/// Data for a one-step-ahead prediction.
///
/// Column `j` (0-based) covers samples `j..=j+ℓ`: the past-input and
/// past-output rows hold `u(j..j+ℓ)` and `y(j..j+ℓ)`, the current-input row
/// `u(j+ℓ)`, the feature rows `φ^k` at time `j+ℓ`, and `y_future` holds
/// `y(j+ℓ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBlocks {
    pub h_d: DenseMatrix,
    pub y_future: Vector,
    pub y_projected: Option<Vector>,
    pub layout: RowLayout,
    pub ell: usize,
    pub m: usize,
}

impl PredictionBlocks {
    /// Projects `y_future` onto the row space of `h_d` (once) and caches it.
    pub fn project(&mut self) -> Result<&Vector> {
        if self.y_projected.is_none() {
            self.y_projected = Some(project_onto_rows(&self.h_d, &self.y_future)?);
        }
        Ok(self.y_projected.as_ref().expect("projection just stored"))
    }
}

/// Minimum trajectory length for one-step prediction blocks.
pub fn min_prediction_length(ell: usize, k: usize) -> usize {
    ell + 2 * ell + 2 + k
}

pub fn build_prediction_blocks(traj: &Trajectory, ell: usize, basis: &BasisSet) -> Result<PredictionBlocks> {
    if ell == 0 {
        return Err(Error::InvalidArgument("lag must be at least 1".into()));
    }
    let k = basis.len();
    let layout = RowLayout::new(ell, k);
    let t = traj.len();
    if t < min_prediction_length(ell, k) {
        return Err(Error::InsufficientData(format!(
            "lag {ell} with {k} basis functions needs at least {} samples, got {t}",
            min_prediction_length(ell, k)
        )));
    }
    let m = t - ell;
    let series = transformed_series(traj, ell, basis)?;
    let (u, y) = (traj.u(), traj.y());
    let mut h_d = DenseMatrix::zeros(layout.rows(), m);
    for j in 0..m {
        for i in 0..ell {
            h_d[(layout.u_past.start + i, j)] = u[j + i];
            h_d[(layout.y_past.start + i, j)] = y[j + i];
        }
        h_d[(layout.u_current, j)] = u[j + ell];
        for (kk, s) in series.iter().enumerate() {
            h_d[(layout.phi.start + kk, j)] = s[j];
        }
    }
    let y_future = Vector::from_iterator(m, y[ell..].iter().copied());
    Ok(PredictionBlocks { h_d, y_future, y_projected: None, layout, ell, m })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentifiabilityReport {
    pub rows: usize,
    pub cols: usize,
    pub observed_rank: usize,
    pub expected_rank: usize,
    pub satisfied: bool,
}

/// Compares the numerical rank of the extended Hankel matrix with
/// `(1+K)·l + ℓ`. `tol` defaults to [`default_rank_tol`].
pub fn check_identifiability(
    traj: &Trajectory,
    l: usize,
    basis: &BasisSet,
    ell: usize,
    tol: Option<f64>,
) -> Result<IdentifiabilityReport> {
    if l < ell + 1 {
        return Err(Error::InvalidArgument(format!("depth {l} must be at least lag + 1 = {}", ell + 1)));
    }
    if let Some(t) = tol.filter(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(Error::InvalidArgument(format!("rank tolerance must lie in (0, 1), got {t}")));
    }
    let h = extended_hankel(traj, l, ell, basis)?;
    let tol = tol.unwrap_or_else(|| default_rank_tol(&h));
    let observed_rank = numerical_rank(&h, tol);
    let expected_rank = (1 + basis.len()) * l + ell;
    Ok(IdentifiabilityReport {
        rows: h.nrows(),
        cols: h.ncols(),
        observed_rank,
        expected_rank,
        satisfied: observed_rank == expected_rank,
    })
}
