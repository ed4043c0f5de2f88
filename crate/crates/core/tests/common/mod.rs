#![allow(dead_code)]

use ddsim_core::system::{gaussian_series, simulate_noisy, InitialCondition, NoiseSpec, SystemParams};
use ddsim_core::{BasisSet, DenseMatrix, Trajectory, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Trajectory of `len` samples from `y = y_start`, Gaussian input, optional
/// equation-error noise.
pub fn simulate_data(params: &SystemParams, basis: &BasisSet, len: usize, mu: f64, seed: u64) -> Trajectory {
    let mut r = rng(seed ^ 0x5eed);
    let u = gaussian_series(&mut r, len, 1.0);
    let ell = params.ell;
    let init = InitialCondition::new(u[..ell].to_vec(), vec![1.0; ell]).unwrap();
    let spec = NoiseSpec::new(mu, seed).unwrap();
    let mut y = vec![1.0; ell];
    y.extend(simulate_noisy(params, basis, &init, &u[ell..], &spec).unwrap());
    Trajectory::new(u, y).unwrap()
}

/// `x Dᵀ (D Dᵀ)⁻¹ D` via an explicit inverse of the Gram matrix.
pub fn normal_equation_projection(data: &DenseMatrix, row: &Vector) -> Vector {
    let gram = data * data.transpose();
    let inv = gram.try_inverse().expect("full row rank");
    let coeffs = inv * (data * row);
    data.transpose() * coeffs
}

/// Plain cyclic coordinate descent for `½‖a g − b‖² + λ‖g‖₁`.
pub fn coordinate_descent_lasso(a: &DenseMatrix, b: &Vector, lambda: f64, sweeps: usize) -> Vector {
    let n = a.ncols();
    let mut g = Vector::zeros(n);
    let mut residual = b.clone();
    let col_sq: Vec<f64> = (0..n).map(|j| a.column(j).norm_squared()).collect();
    for _ in 0..sweeps {
        for j in 0..n {
            let aj = a.column(j);
            let rho = aj.dot(&residual) + col_sq[j] * g[j];
            let new = if rho > lambda {
                (rho - lambda) / col_sq[j]
            } else if rho < -lambda {
                (rho + lambda) / col_sq[j]
            } else {
                0.0
            };
            let delta = new - g[j];
            if delta != 0.0 {
                residual.axpy(-delta, &aj, 1.0);
                g[j] = new;
            }
        }
    }
    g
}
