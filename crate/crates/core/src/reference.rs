//! The benchmark system `y(t) = sin(y(t−1)) − 0.1·y(t−2)² + u(t−2)` and the
//! default Monte Carlo setup built around it.

use crate::basis::BasisSet;
use crate::experiment::{ExperimentConfig, InputSpec, NoiseModel, SystemSpec};
use crate::linalg::{SolveMode, SolveOptions};
use crate::system::SystemParams;

pub const LAG: usize = 2;

/// `{sin(y[-1]), y[-2]^2}`: exactly the nonlinear terms of the system.
pub fn minimal_basis() -> BasisSet {
    BasisSet::parse(&["sin(y[-1])", "y[-2]^2"]).expect("static basis")
}

/// Six candidate functions `{y², y³, y⁴, cos y, sin y, eʸ}`. The square acts
/// on `y[-2]`, everything else on `y[-1]`, so the set contains both terms of
/// the true system.
pub fn six_function_basis() -> BasisSet {
    BasisSet::parse(&["y[-2]^2", "y[-1]^3", "y[-1]^4", "cos(y[-1])", "sin(y[-1])", "exp(y[-1])"]).expect("static basis")
}

/// Parameters over [`minimal_basis`].
pub fn params() -> SystemParams {
    let mut p = SystemParams::zeros(LAG, 2);
    *p.u_coeff_mut(2) = 1.0;
    p.theta_nl = vec![1.0, -0.1];
    p
}

/// A variant with the input acting without delay:
/// `y(t) = sin(y(t−1)) − 0.1·y(t−2)² + u(t)`.
pub fn feedthrough_params() -> SystemParams {
    let mut p = SystemParams::zeros(LAG, 2);
    *p.u_coeff_mut(0) = 1.0;
    p.theta_nl = vec![1.0, -0.1];
    p
}

/// The `λ` grid of the default configuration: 13 points
/// spaced by half a decade from 1e-6 to 1.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..13).map(|i| 10f64.powf(-6.0 + 0.5 * i as f64)).collect()
}

/// 80-sample reference trajectory from `y = (1, 1)`, 100 trials of 68
/// noisy samples at `μ = 0.1`, ten-step horizon, six-function estimation
/// basis, ridge solve over [`default_lambda_grid`].
pub fn default_config() -> ExperimentConfig {
    ExperimentConfig {
        system: SystemSpec { params: params(), basis: minimal_basis() },
        y_start: vec![1.0, 1.0],
        fit_basis: six_function_basis(),
        ell: LAG,
        t_true: 80,
        t_data: 68,
        trials: 100,
        mu: 0.1,
        horizon: 10,
        solve: SolveOptions { mode: SolveMode::Ridge, ..SolveOptions::default() },
        lambda_grid: default_lambda_grid(),
        base_seed: 2024,
        input: InputSpec::default(),
        noise_model: NoiseModel::Equation,
    }
}
