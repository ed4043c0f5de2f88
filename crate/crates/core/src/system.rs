//! The NARX-type system class
//!
//! ```text
//! y(t) = θ_lin · [x_y(t); x_u(t)] + θ_nl · φ(x_y(t), x_u(t))
//! x_y(t) = (y(t−ℓ), …, y(t−1)),  x_u(t) = (u(t−ℓ), …, u(t−1), u(t))
//! ```
//!
//! together with its ground-truth simulator and the two noise models.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::linalg::ensure_finite_slice;

/// Parameters of one system. `theta_lin` holds `2ℓ+1` coefficients ordered
/// `y(t−ℓ) … y(t−1), u(t−ℓ) … u(t−1), u(t)`; `theta_nl` follows basis order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub ell: usize,
    pub theta_lin: Vec<f64>,
    pub theta_nl: Vec<f64>,
}

impl SystemParams {
    pub fn new(ell: usize, theta_lin: Vec<f64>, theta_nl: Vec<f64>) -> Result<Self> {
        let p = SystemParams { ell, theta_lin, theta_nl };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(ell: usize, k: usize) -> Self {
        SystemParams { ell, theta_lin: vec![0.0; 2 * ell + 1], theta_nl: vec![0.0; k] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell == 0 {
            return Err(Error::InvalidArgument("lag must be at least 1".into()));
        }
        if self.theta_lin.len() != 2 * self.ell + 1 {
            return Err(Error::Dimension(format!(
                "theta_lin needs {} entries for lag {}, got {}",
                2 * self.ell + 1,
                self.ell,
                self.theta_lin.len()
            )));
        }
        ensure_finite_slice(&self.theta_lin, "theta_lin")?;
        ensure_finite_slice(&self.theta_nl, "theta_nl")
    }

    /// Coefficient of `y(t−lag)`, `1 ≤ lag ≤ ℓ`.
    pub fn y_coeff(&self, lag: usize) -> f64 {
        assert!((1..=self.ell).contains(&lag));
        self.theta_lin[self.ell - lag]
    }

    /// Coefficient of `u(t−lag)`, `0 ≤ lag ≤ ℓ`.
    pub fn u_coeff(&self, lag: usize) -> f64 {
        assert!(lag <= self.ell);
        self.theta_lin[2 * self.ell - lag]
    }

    pub fn y_coeff_mut(&mut self, lag: usize) -> &mut f64 {
        assert!((1..=self.ell).contains(&lag));
        &mut self.theta_lin[self.ell - lag]
    }

    pub fn u_coeff_mut(&mut self, lag: usize) -> &mut f64 {
        assert!(lag <= self.ell);
        &mut self.theta_lin[2 * self.ell - lag]
    }

    pub(crate) fn check_basis(&self, basis: &BasisSet) -> Result<()> {
        self.validate()?;
        basis.check_lag(self.ell)?;
        if basis.len() != self.theta_nl.len() {
            return Err(Error::Dimension(format!(
                "{} nonlinear coefficients for {} basis functions",
                self.theta_nl.len(),
                basis.len()
            )));
        }
        Ok(())
    }

    /// Right-hand side of the system equation at one time step.
    pub fn one_step(&self, basis: &BasisSet, x_y: &[f64], x_u: &[f64]) -> Result<f64> {
        let lin: f64 = self.theta_lin.iter().zip(x_y.iter().chain(x_u)).map(|(a, b)| a * b).sum();
        let phi = basis.eval(x_y, x_u)?;
        let nl: f64 = self.theta_nl.iter().zip(&phi).map(|(a, b)| a * b).sum();
        Ok(lin + nl)
    }
}

/// The last `ℓ` samples before the simulated segment, most recent last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub u_past: Vec<f64>,
    pub y_past: Vec<f64>,
}

impl InitialCondition {
    pub fn new(u_past: Vec<f64>, y_past: Vec<f64>) -> Result<Self> {
        if u_past.len() != y_past.len() {
            return Err(Error::Dimension(format!(
                "initial condition has {} inputs and {} outputs",
                u_past.len(),
                y_past.len()
            )));
        }
        ensure_finite_slice(&u_past, "initial inputs")?;
        ensure_finite_slice(&y_past, "initial outputs")?;
        Ok(InitialCondition { u_past, y_past })
    }

    pub fn zeros(ell: usize) -> Self {
        InitialCondition { u_past: vec![0.0; ell], y_past: vec![0.0; ell] }
    }

    pub fn lag(&self) -> usize {
        self.u_past.len()
    }

    /// Drops the oldest pair and appends `(u, y)`.
    pub fn roll(&mut self, u: f64, y: f64) {
        if self.u_past.is_empty() {
            return;
        }
        self.u_past.rotate_left(1);
        self.y_past.rotate_left(1);
        *self.u_past.last_mut().expect("nonempty") = u;
        *self.y_past.last_mut().expect("nonempty") = y;
    }

    pub(crate) fn check_lag(&self, ell: usize) -> Result<()> {
        if self.u_past.len() != ell || self.y_past.len() != ell {
            return Err(Error::Dimension(format!(
                "initial condition has {}/{} samples, lag is {ell}",
                self.u_past.len(),
                self.y_past.len()
            )));
        }
        ensure_finite_slice(&self.u_past, "initial inputs")?;
        ensure_finite_slice(&self.y_past, "initial outputs")
    }
}

/// Noise level `μ` and the seed of the standard-normal stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mu: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(mu: f64, seed: u64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise level must be nonnegative, got {mu}")));
        }
        Ok(NoiseSpec { mu, seed })
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn simulate_inner(
    params: &SystemParams,
    basis: &BasisSet,
    init: &InitialCondition,
    u: &[f64],
    mut noise: impl FnMut() -> f64,
) -> Result<Vec<f64>> {
    params.check_basis(basis)?;
    init.check_lag(params.ell)?;
    ensure_finite_slice(u, "input")?;
    let ell = params.ell;
    let mut u_hist = init.u_past.clone();
    let mut y_hist = init.y_past.clone();
    u_hist.extend_from_slice(u);
    let mut out = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        let x_y = &y_hist[i..i + ell];
        let x_u = &u_hist[i..=i + ell];
        let y = params.one_step(basis, x_y, x_u)? + noise();
        if !y.is_finite() {
            return Err(Error::NonFinite(format!("simulation diverged at step {}", i + 1)));
        }
        y_hist.push(y);
        out.push(y);
    }
    Ok(out)
}

/// Rolls the noise-free system forward over the input `u`.
pub fn simulate_true(params: &SystemParams, basis: &BasisSet, init: &InitialCondition, u: &[f64]) -> Result<Vec<f64>> {
    simulate_inner(params, basis, init, u, || 0.0)
}

/// Equation-error simulation: `ỹ(t) = f(x_ỹ(t), x_u(t)) + μ r(t)`, the noisy
/// outputs feeding back into the regressors.
pub fn simulate_noisy(
    params: &SystemParams,
    basis: &BasisSet,
    init: &InitialCondition,
    u: &[f64],
    spec: &NoiseSpec,
) -> Result<Vec<f64>> {
    if spec.mu == 0.0 {
        return simulate_true(params, basis, init, u);
    }
    let mut rng = spec.rng();
    simulate_inner(params, basis, init, u, || {
        let r: f64 = StandardNormal.sample(&mut rng);
        spec.mu * r
    })
}

/// Output-error noise: `ỹ(t) = y(t) + μ r(t)`.
pub fn add_noise(y: &[f64], spec: &NoiseSpec) -> Vec<f64> {
    if spec.mu == 0.0 {
        return y.to_vec();
    }
    let mut rng = spec.rng();
    y.iter()
        .map(|v| {
            let r: f64 = StandardNormal.sample(&mut rng);
            v + spec.mu * r
        })
        .collect()
}

/// Standard-normal series of length `n` scaled by `scale`.
pub fn gaussian_series(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let r: f64 = StandardNormal.sample(rng);
            scale * r
        })
        .collect()
}

/// Standard-normal input of length `n` drawn from `seed` on the given
/// ChaCha stream.
pub fn seeded_gaussian(seed: u64, stream: u64, n: usize, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    gaussian_series(&mut rng, n, scale)
}
