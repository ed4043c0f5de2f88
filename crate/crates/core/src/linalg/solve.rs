use serde::{Deserialize, Serialize};

use super::lq::householder_lq;
use super::rank::{default_rank_tol, numerical_rank, singular_values};
use super::{back_substitute, ensure_finite_matrix, ensure_finite_slice, forward_substitute};
use super::{DenseMatrix, Vector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    MinNorm,
    Ridge,
    Lasso,
}

impl std::str::FromStr for SolveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min-norm" => Ok(SolveMode::MinNorm),
            "ridge" => Ok(SolveMode::Ridge),
            "lasso" => Ok(SolveMode::Lasso),
            other => {
                Err(Error::InvalidArgument(format!("unknown solve mode {other:?} (expected min-norm, ridge or lasso)")))
            }
        }
    }
}

impl std::fmt::Display for SolveMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveMode::MinNorm => "min-norm",
            SolveMode::Ridge => "ridge",
            SolveMode::Lasso => "lasso",
        })
    }
}

/// How the per-step least-squares problem is solved.
///
/// A zero `lambda` always means the minimum-norm solution, whatever the mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub mode: SolveMode,
    pub lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { mode: SolveMode::MinNorm, lambda: 0.0, max_iters: 10_000, tol: 1e-8 }
    }
}

impl SolveOptions {
    pub fn min_norm() -> Self {
        Self::default()
    }

    pub fn ridge(lambda: f64) -> Self {
        SolveOptions { mode: SolveMode::Ridge, lambda, ..Self::default() }
    }

    pub fn lasso(lambda: f64) -> Self {
        SolveOptions { mode: SolveMode::Lasso, lambda, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and nonnegative, got {}", self.lambda)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Result of a proximal-gradient lasso solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub g: Vector,
    pub iterations: usize,
    /// False when `max_iters` ran out before the relative-change threshold.
    pub converged: bool,
}

/// Output of [`solve`]: the solution and whether an iterative solver stopped
/// early.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub g: Vector,
    pub converged: bool,
}

fn check_system(a: &DenseMatrix, b: &Vector) -> Result<()> {
    if b.len() != a.nrows() {
        return Err(Error::Dimension(format!(
            "right-hand side has length {} but matrix has {} rows",
            b.len(),
            a.nrows()
        )));
    }
    ensure_finite_matrix(a, "matrix")?;
    ensure_finite_slice(b.as_slice(), "right-hand side")
}

/// Minimum-norm least-squares solution of `a g ≈ b`.
///
/// Full-rank problems go through an LQ (wide) or QR (tall) factorization;
/// rank-deficient ones through a truncated SVD at the default rank tolerance.
pub fn solve_min_norm(a: &DenseMatrix, b: &Vector) -> Result<Vector> {
    check_system(a, b)?;
    let (m, n) = a.shape();
    let tol = default_rank_tol(a);
    let rank = numerical_rank(a, tol);

    if rank == m && m <= n {
        // a = L Q, g = Qᵀ L⁻¹ b
        let (l, q) = householder_lq(a);
        let z = forward_substitute(&l, b);
        return Ok(q.transpose() * z);
    }
    if rank == n && m > n {
        // aᵀ = L Q, so a = Qᵀ Lᵀ and Lᵀ g = Q b
        let (l, q) = householder_lq(&a.transpose());
        let rhs = &q * b;
        return Ok(back_substitute(&l.transpose(), &rhs));
    }

    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.max();
    let cutoff = tol * top;
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut g = Vector::zeros(n);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let coeff = u.column(k).dot(b) / s;
            g += v_t.row(k).transpose() * coeff;
        }
    }
    Ok(g)
}

/// Minimizer of `½‖a g − b‖² + λ‖g‖²`, i.e. the solution of
/// `(aᵀa + 2λI) g = aᵀb`.
pub fn solve_ridge(a: &DenseMatrix, b: &Vector, lambda: f64) -> Result<Vector> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("ridge needs a positive finite lambda, got {lambda}")));
    }
    check_system(a, b)?;
    let (m, n) = a.shape();
    let shift = 2.0 * lambda;
    let spd_failure = || Error::NonFinite("ridge system is not numerically positive definite".into());
    if m <= n {
        // push-through form: g = aᵀ (a aᵀ + 2λI)⁻¹ b
        let mut gram = a * a.transpose();
        for i in 0..m {
            gram[(i, i)] += shift;
        }
        let chol = gram.cholesky().ok_or_else(spd_failure)?;
        Ok(a.transpose() * chol.solve(b))
    } else {
        let mut gram = a.transpose() * a;
        for i in 0..n {
            gram[(i, i)] += shift;
        }
        let chol = gram.cholesky().ok_or_else(spd_failure)?;
        Ok(chol.solve(&(a.transpose() * b)))
    }
}

/// `½‖a g − b‖² + λ‖g‖₁`.
pub fn lasso_objective(a: &DenseMatrix, b: &Vector, lambda: f64, g: &Vector) -> f64 {
    0.5 * (a * g - b).norm_squared() + lambda * g.lp_norm(1)
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Proximal-gradient (ISTA) minimization of `½‖a g − b‖² + λ‖g‖₁` with step
/// `1/‖aᵀa‖₂`, starting from zero.
///
/// Stops once `‖g⁺ − g‖ ≤ tol · max(‖g⁺‖, 1)`. Running out of iterations is
/// not an error; the last iterate is returned with `converged == false`.
pub fn solve_lasso(a: &DenseMatrix, b: &Vector, lambda: f64, opts: &SolveOptions) -> Result<LassoSolution> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lasso needs a positive finite lambda, got {lambda}")));
    }
    opts.validate()?;
    check_system(a, b)?;

    let n = a.ncols();
    let sigma_max = singular_values(a)[0];
    let lipschitz = sigma_max * sigma_max;
    if lipschitz == 0.0 {
        return Ok(LassoSolution { g: Vector::zeros(n), iterations: 0, converged: true });
    }
    let step = 1.0 / lipschitz;
    let threshold = step * lambda;

    let a_t = a.transpose();
    let mut g = Vector::zeros(n);
    for iter in 1..=opts.max_iters {
        let grad = &a_t * (a * &g - b);
        let next = (&g - grad * step).map(|x| soft_threshold(x, threshold));
        let change = (&next - &g).norm();
        g = next;
        if change <= opts.tol * g.norm().max(1.0) {
            return Ok(LassoSolution { g, iterations: iter, converged: true });
        }
    }
    Ok(LassoSolution { g, iterations: opts.max_iters, converged: false })
}

/// Dispatches on `opts.mode`; `lambda == 0` falls back to the minimum-norm
/// solution.
pub fn solve(a: &DenseMatrix, b: &Vector, opts: &SolveOptions) -> Result<Solution> {
    opts.validate()?;
    if opts.lambda == 0.0 || opts.mode == SolveMode::MinNorm {
        return Ok(Solution { g: solve_min_norm(a, b)?, converged: true });
    }
    match opts.mode {
        SolveMode::Ridge => Ok(Solution { g: solve_ridge(a, b, opts.lambda)?, converged: true }),
        SolveMode::Lasso => {
            let sol = solve_lasso(a, b, opts.lambda, opts)?;
            Ok(Solution { g: sol.g, converged: sol.converged })
        }
        SolveMode::MinNorm => unreachable!(),
    }
}
