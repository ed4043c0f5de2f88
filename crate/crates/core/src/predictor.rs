//! Model-based and data-driven one-step-iterated prediction.
//!
//! The data-driven route builds the one-step data matrix `H_d` and the row
//! of future outputs, projects that row onto the rows of `H_d` with a
//! truncated LQ factorization, and then for every step solves
//! `H_d g ≈ v_ini` and predicts `ŷ = ȳ g`.
//!
//! The model-based route stacks the same data as
//! `S = [x_u; x_y; φ; ỹ]`, factors it with the same block LQ and reads the
//! parameters off as `θ̂ = L21 L11⁻¹`. With the minimum-norm solve both
//! routes give the same one-step prediction, and on noise-free data from a
//! system in the basis span both reproduce the true trajectory.

use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::hankel::{build_prediction_blocks, PredictionBlocks, RowLayout};
use crate::linalg::{
    back_substitute, default_rank_tol, ensure_finite_slice, lq_factor, numerical_rank, solve, DenseMatrix, LqFactors,
    SolveOptions, Vector,
};
use crate::system::{simulate_true, InitialCondition, SystemParams};
use crate::trajectory::Trajectory;

/// Predicted outputs above this magnitude abort a data-driven prediction.
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionConfig {
    pub solve: SolveOptions,
    pub horizon: usize,
    #[serde(default = "default_bound")]
    pub divergence_bound: f64,
}

fn default_bound() -> f64 {
    DEFAULT_DIVERGENCE_BOUND
}

impl PredictionConfig {
    pub fn new(solve: SolveOptions, horizon: usize) -> Self {
        PredictionConfig { solve, horizon, divergence_bound: DEFAULT_DIVERGENCE_BOUND }
    }

    pub fn validate(&self) -> Result<()> {
        self.solve.validate()?;
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if self.divergence_bound.is_nan() || self.divergence_bound <= 0.0 {
            return Err(Error::InvalidArgument("divergence bound must be positive".into()));
        }
        Ok(())
    }
}

/// Rows of `S` are, in order: `u(t−ℓ) … u(t)`, `y(t−ℓ) … y(t−1)`, `φ`, `ỹ`.
fn model_based_matrix(blocks: &PredictionBlocks) -> DenseMatrix {
    let RowLayout { u_past, y_past, u_current, phi } = &blocks.layout;
    let order: Vec<usize> =
        u_past.clone().chain(std::iter::once(*u_current)).chain(y_past.clone()).chain(phi.clone()).collect();
    let mut s = DenseMatrix::zeros(order.len() + 1, blocks.m);
    for (dst, &src) in order.iter().enumerate() {
        s.row_mut(dst).copy_from(&blocks.h_d.row(src));
    }
    s.row_mut(order.len()).copy_from(&blocks.y_future.transpose());
    s
}

/// Parameter estimate together with the factorization it came from.
#[derive(Debug, Clone)]
pub struct Identification {
    pub params: SystemParams,
    pub factors: LqFactors,
}

/// `θ̂ = L21 L11⁻¹` from the block LQ of `S`, mapped back to
/// [`SystemParams`] order.
pub fn identify(traj: &Trajectory, ell: usize, basis: &BasisSet) -> Result<Identification> {
    let blocks = build_prediction_blocks(traj, ell, basis)?;
    let s = model_based_matrix(&blocks);
    let split = s.nrows() - 1;
    let factors = lq_factor(&s, split)?;

    let tol = default_rank_tol(&s);
    let rank = numerical_rank(&factors.l11, tol);
    if rank < split {
        return Err(Error::RankDeficient(format!(
            "regressor block has rank {rank} of {split}; data is not exciting enough or the basis is redundant"
        )));
    }

    // θ̂ L11 = L21  ⇔  L11ᵀ θ̂ᵀ = L21ᵀ
    let theta = back_substitute(&factors.l11.transpose(), &factors.l21.row(0).transpose());
    ensure_finite_slice(theta.as_slice(), "parameter estimate")?;

    let k = basis.len();
    let mut theta_lin = Vec::with_capacity(2 * ell + 1);
    theta_lin.extend(theta.rows(ell + 1, ell).iter());
    theta_lin.extend(theta.rows(0, ell + 1).iter());
    let theta_nl = theta.rows(2 * ell + 1, k).iter().copied().collect();
    Ok(Identification { params: SystemParams { ell, theta_lin, theta_nl }, factors })
}

pub fn identify_parameters(traj: &Trajectory, ell: usize, basis: &BasisSet) -> Result<SystemParams> {
    identify(traj, ell, basis).map(|id| id.params)
}

/// Plugs estimated parameters into the system recursion.
pub fn predict_model_based(
    params: &SystemParams,
    basis: &BasisSet,
    init: &InitialCondition,
    u_f: &[f64],
) -> Result<Vec<f64>> {
    simulate_true(params, basis, init, u_f)
}

/// `v_ini = [u_ini; y_ini; u_next; φ(y_ini, [u_ini; u_next])]`, in the row
/// order of `H_d`.
pub fn initial_vector(init: &InitialCondition, u_next: f64, basis: &BasisSet) -> Result<Vector> {
    let ell = init.lag();
    let mut v = Vec::with_capacity(2 * ell + 1 + basis.len());
    v.extend_from_slice(&init.u_past);
    v.extend_from_slice(&init.y_past);
    v.push(u_next);
    let x_u: Vec<f64> = init.u_past.iter().copied().chain(std::iter::once(u_next)).collect();
    basis.eval_into(&init.y_past, &x_u, &mut v)?;
    Ok(Vector::from_vec(v))
}

/// One step of the data-driven predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub y: f64,
    pub g: Vector,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataDrivenPrediction {
    pub y: Vec<f64>,
    /// Steps where the iterative solver hit its iteration cap.
    pub unconverged_steps: usize,
}

/// The data-driven predictor with its data matrix and projected output row
/// computed once up front.
#[derive(Debug, Clone)]
pub struct DataDrivenPredictor {
    blocks: PredictionBlocks,
    basis: BasisSet,
}

impl DataDrivenPredictor {
    pub fn new(traj: &Trajectory, ell: usize, basis: &BasisSet) -> Result<Self> {
        let mut blocks = build_prediction_blocks(traj, ell, basis)?;
        blocks.project()?;
        Ok(DataDrivenPredictor { blocks, basis: basis.clone() })
    }

    pub fn blocks(&self) -> &PredictionBlocks {
        &self.blocks
    }

    pub fn projected_row(&self) -> &Vector {
        self.blocks.y_projected.as_ref().expect("projected at construction")
    }

    pub fn step(&self, init: &InitialCondition, u_next: f64, opts: &SolveOptions) -> Result<StepResult> {
        init.check_lag(self.blocks.ell)?;
        if !u_next.is_finite() {
            return Err(Error::NonFinite("future input".into()));
        }
        let v = initial_vector(init, u_next, &self.basis)?;
        let sol = solve(&self.blocks.h_d, &v, opts)?;
        let y = self.projected_row().dot(&sol.g);
        Ok(StepResult { y, g: sol.g, converged: sol.converged })
    }

    pub fn predict(
        &self,
        init: &InitialCondition,
        u_f: &[f64],
        cfg: &PredictionConfig,
    ) -> Result<DataDrivenPrediction> {
        cfg.validate()?;
        if u_f.len() != cfg.horizon {
            return Err(Error::Dimension(format!(
                "future input has {} samples, horizon is {}",
                u_f.len(),
                cfg.horizon
            )));
        }
        let mut window = init.clone();
        let mut y = Vec::with_capacity(u_f.len());
        let mut unconverged_steps = 0;
        for (i, &u) in u_f.iter().enumerate() {
            let step = self.step(&window, u, &cfg.solve)?;
            if !step.y.is_finite() || step.y.abs() > cfg.divergence_bound {
                return Err(Error::NonFinite(format!("prediction diverged at step {}: {}", i + 1, step.y)));
            }
            if !step.converged {
                unconverged_steps += 1;
            }
            window.roll(u, step.y);
            y.push(step.y);
        }
        Ok(DataDrivenPrediction { y, unconverged_steps })
    }
}

/// Iterated one-step data-driven prediction over `u_f`. The lag is taken
/// from the initial condition.
pub fn predict_data_driven(
    traj: &Trajectory,
    basis: &BasisSet,
    init: &InitialCondition,
    u_f: &[f64],
    cfg: &PredictionConfig,
) -> Result<DataDrivenPrediction> {
    cfg.validate()?;
    DataDrivenPredictor::new(traj, init.lag(), basis)?.predict(init, u_f, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub y_dd: f64,
    pub y_mb: f64,
    pub abs_diff: f64,
    pub equivalent: bool,
}

/// Compares one minimum-norm data-driven step with `θ̂ · v_ini`.
/// `equivalent` means `|y_dd − y_mb| ≤ tol · max(1, |y_mb|)`.
pub fn check_equivalence(
    traj: &Trajectory,
    basis: &BasisSet,
    init: &InitialCondition,
    u_next: f64,
    tol: f64,
) -> Result<EquivalenceReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let ell = init.lag();
    let params = identify_parameters(traj, ell, basis)?;
    let x_u: Vec<f64> = init.u_past.iter().copied().chain(std::iter::once(u_next)).collect();
    let y_mb = params.one_step(basis, &init.y_past, &x_u)?;
    let dd = DataDrivenPredictor::new(traj, ell, basis)?;
    let y_dd = dd.step(init, u_next, &SolveOptions::min_norm())?.y;
    let abs_diff = (y_dd - y_mb).abs();
    Ok(EquivalenceReport { y_dd, y_mb, abs_diff, equivalent: abs_diff <= tol * y_mb.abs().max(1.0) })
}
