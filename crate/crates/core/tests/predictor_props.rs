mod common;

use common::*;
use ddsim_core::predictor::*;
use ddsim_core::system::{add_noise, simulate_true, NoiseSpec};
use ddsim_core::{reference, BasisSet, Error, InitialCondition, SolveOptions, Trajectory, Vector};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn window(traj: &Trajectory, end: usize, ell: usize) -> InitialCondition {
    InitialCondition::new(traj.u()[end - ell..end].to_vec(), traj.y()[end - ell..end].to_vec()).unwrap()
}

/// ȳ and g from explicit normal equations and the SVD pseudo-inverse.
fn oracle_step(traj: &Trajectory, ell: usize, basis: &BasisSet, v: &Vector) -> f64 {
    let dd = DataDrivenPredictor::new(traj, ell, basis).unwrap();
    let b = dd.blocks();
    let ybar = normal_equation_projection(&b.h_d, &b.y_future);
    let g = b.h_d.clone().pseudo_inverse(1e-12).unwrap() * v;
    ybar.dot(&g)
}

/// θ̂ from `min ‖ỹ − θ Φ‖²` by normal equations, Φ in `H_d` row order.
fn oracle_theta(traj: &Trajectory, ell: usize, basis: &BasisSet) -> Vector {
    let dd = DataDrivenPredictor::new(traj, ell, basis).unwrap();
    let b = dd.blocks();
    let gram: DMatrix<f64> = &b.h_d * b.h_d.transpose();
    gram.try_inverse().unwrap() * (&b.h_d * &b.y_future)
}

#[test]
fn single_step_matches_independent_oracle() {
    for seed in 0..10 {
        let basis = reference::six_function_basis();
        let traj = simulate_data(&reference::params(), &reference::minimal_basis(), 68, 0.1, seed);
        let dd = DataDrivenPredictor::new(&traj, 2, &basis).unwrap();
        let init = window(&traj, 40, 2);
        let u_next = 0.3;
        let v = initial_vector(&init, u_next, &basis).unwrap();
        let got = dd.step(&init, u_next, &SolveOptions::min_norm()).unwrap().y;
        let want = oracle_step(&traj, 2, &basis, &v);
        assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn min_norm_step_equals_model_based_step() {
    for (basis, seeds) in [(reference::minimal_basis(), 0..25u64), (reference::six_function_basis(), 25..50)] {
        for seed in seeds {
            let traj = simulate_data(&reference::params(), &reference::minimal_basis(), 68, 0.1, seed);
            let init = window(&traj, 30, 2);
            let r = check_equivalence(&traj, &basis, &init, -0.7, 1e-6).unwrap();
            assert!(r.equivalent, "seed {seed}: {r:?}");
        }
    }
}

#[test]
fn step_equals_l21_times_l11_inverse_applied_to_v() {
    let basis = reference::minimal_basis();
    let traj = simulate_data(&reference::params(), &basis, 68, 0.05, 77);
    let id = identify(&traj, 2, &basis).unwrap();
    let init = window(&traj, 50, 2);
    let v = initial_vector(&init, 0.1, &basis).unwrap();
    // v in S order: u(t-2) u(t-1) u(t) y(t-2) y(t-1) φ
    let v_s = Vector::from_vec(vec![v[0], v[1], v[4], v[2], v[3], v[5], v[6]]);
    let gamma = id.factors.l11.clone().try_inverse().unwrap() * v_s;
    let want = (&id.factors.l21 * gamma)[0];
    let dd = DataDrivenPredictor::new(&traj, 2, &basis).unwrap();
    let got = dd.step(&init, 0.1, &SolveOptions::min_norm()).unwrap().y;
    assert!((got - want).abs() < 1e-9);
}

#[test]
fn noise_free_data_reproduces_true_trajectory() {
    let params = reference::params();
    for basis in [reference::minimal_basis(), reference::six_function_basis()] {
        let traj = simulate_data(&params, &reference::minimal_basis(), 80, 0.0, 3);
        let data = traj.slice(0, 68);
        let init = window(&traj, 68, 2);
        let u_f = &traj.u()[68..78];
        let truth = &traj.y()[68..78];
        let pred = predict_data_driven(&data, &basis, &init, u_f, &PredictionConfig::new(SolveOptions::min_norm(), 10))
            .unwrap();
        for (p, t) in pred.y.iter().zip(truth) {
            assert!((p - t).abs() <= 1e-6, "{p} vs {t}");
        }
    }
}

#[test]
fn prediction_rolls_the_window_one_sample_at_a_time() {
    let basis = reference::minimal_basis();
    let traj = simulate_data(&reference::params(), &basis, 68, 0.1, 5);
    let dd = DataDrivenPredictor::new(&traj, 2, &basis).unwrap();
    let init = window(&traj, 68, 2);
    let u_f = [0.2, -0.4, 1.1, 0.0, -2.0];
    let opts = SolveOptions::min_norm();
    let pred = dd.predict(&init, &u_f, &PredictionConfig::new(opts, 5)).unwrap();

    let (mut up, mut yp) = (init.u_past.clone(), init.y_past.clone());
    for (i, &u) in u_f.iter().enumerate() {
        let w = InitialCondition::new(up.clone(), yp.clone()).unwrap();
        let y = dd.step(&w, u, &opts).unwrap().y;
        assert_eq!(y.to_bits(), pred.y[i].to_bits());
        up = vec![up[1], u];
        yp = vec![yp[1], y];
    }
}

#[test]
fn seeded_runs_are_bitwise_identical() {
    let run = || {
        let basis = reference::six_function_basis();
        let traj = simulate_data(&reference::params(), &reference::minimal_basis(), 68, 0.1, 99);
        let init = window(&traj, 68, 2);
        predict_data_driven(&traj, &basis, &init, &[0.1; 10], &PredictionConfig::new(SolveOptions::ridge(1e-3), 10))
            .unwrap()
            .y
    };
    let a: Vec<u64> = run().iter().map(|v| v.to_bits()).collect();
    let b: Vec<u64> = run().iter().map(|v| v.to_bits()).collect();
    assert_eq!(a, b);
}

#[test]
fn identification_recovers_parameters_exactly_without_noise() {
    for params in [reference::params(), reference::feedthrough_params()] {
        let traj = simulate_data(&params, &reference::minimal_basis(), 68, 0.0, 21);
        let est = identify_parameters(&traj, 2, &reference::minimal_basis()).unwrap();
        for (a, b) in est.theta_lin.iter().zip(&params.theta_lin) {
            assert!((a - b).abs() < 1e-8);
        }
        for (a, b) in est.theta_nl.iter().zip(&params.theta_nl) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn noisy_estimate_matches_least_squares() {
    let basis = reference::six_function_basis();
    let traj = simulate_data(&reference::params(), &reference::minimal_basis(), 68, 0.1, 31);
    let est = identify_parameters(&traj, 2, &basis).unwrap();
    let theta = oracle_theta(&traj, 2, &basis);
    // H_d order: u(t-2) u(t-1) y(t-2) y(t-1) u(t) φ
    let mapped = [
        (est.y_coeff(2), theta[2]),
        (est.y_coeff(1), theta[3]),
        (est.u_coeff(2), theta[0]),
        (est.u_coeff(1), theta[1]),
        (est.u_coeff(0), theta[4]),
    ];
    for (a, b) in mapped {
        assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "{a} vs {b}");
    }
    for (k, a) in est.theta_nl.iter().enumerate() {
        assert!((a - theta[5 + k]).abs() < 1e-6 * theta[5 + k].abs().max(1.0));
    }
}

#[test]
fn duplicate_basis_function_is_rank_deficient() {
    let basis = BasisSet::parse(&["sin(y[-1])", "sin(y[-1])"]).unwrap();
    let traj = simulate_data(&reference::params(), &reference::minimal_basis(), 68, 0.1, 41);
    assert!(matches!(identify_parameters(&traj, 2, &basis), Err(Error::RankDeficient(_))));
}

#[test]
fn regularized_step_differs_from_model_based_step() {
    let basis = reference::six_function_basis();
    let traj = simulate_data(&reference::params(), &reference::minimal_basis(), 68, 0.1, 51);
    let init = window(&traj, 60, 2);
    let params = identify_parameters(&traj, 2, &basis).unwrap();
    let y_mb = params.one_step(&basis, &init.y_past, &[init.u_past[0], init.u_past[1], 0.5]).unwrap();
    let dd = DataDrivenPredictor::new(&traj, 2, &basis).unwrap();
    let y_ridge = dd.step(&init, 0.5, &SolveOptions::ridge(1.0)).unwrap().y;
    assert!((y_ridge - y_mb).abs() > 1e-6);
}

#[test]
fn model_based_prediction_is_the_true_recursion() {
    let params = reference::params();
    let basis = reference::minimal_basis();
    let init = InitialCondition::new(vec![0.1, 0.2], vec![1.0, 1.0]).unwrap();
    let u = [0.3, -0.2, 0.5];
    let got = predict_model_based(&params, &basis, &init, &u).unwrap();
    let mut y: Vec<f64> = vec![1.0, 1.0];
    let mut uu = vec![0.1, 0.2];
    uu.extend_from_slice(&u);
    for t in 2..5 {
        y.push(y[t - 1].sin() - 0.1 * y[t - 2] * y[t - 2] + uu[t - 2]);
    }
    assert_eq!(got, y[2..].to_vec());
    assert_eq!(got, simulate_true(&params, &basis, &init, &u).unwrap());
}

#[test]
fn output_noise_has_requested_scale() {
    let n = 100_000;
    let noisy = add_noise(&vec![0.0; n], &NoiseSpec::new(0.1, 7).unwrap());
    let mean = noisy.iter().sum::<f64>() / n as f64;
    let var = noisy.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((var.sqrt() - 0.1).abs() <= 0.001, "std {}", var.sqrt());
    assert!(mean.abs() < 0.002);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn equivalence_holds_for_random_seeds_and_steps(seed in any::<u64>(), end in 2usize..68, u_next in -2.0f64..2.0) {
        let basis = reference::six_function_basis();
        let traj = simulate_data(&reference::params(), &reference::minimal_basis(), 68, 0.1, seed);
        let init = window(&traj, end, 2);
        let r = check_equivalence(&traj, &basis, &init, u_next, 1e-6).unwrap();
        prop_assert!(r.equivalent, "{:?}", r);
    }
}
