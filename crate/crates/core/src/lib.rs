//! Data-driven simulation of nonlinear SISO systems.
//!
//! Future outputs are predicted directly from a (noisy) recorded trajectory:
//! the data are arranged in extended Hankel matrices, the future-output row
//! is projected onto the data rows with a truncated LQ factorization, and
//! the prediction is iterated one step at a time. A classical
//! parameter-estimation route is provided alongside, and the two are shown
//! to agree step for step.
//!
//! ```
//! use ddsim_core::{reference, predictor, system::{simulate_true, InitialCondition}, Trajectory};
//!
//! let params = reference::params();
//! let basis = reference::minimal_basis();
//! let u: Vec<f64> = (0..40).map(|t| ((t * 7919 % 101) as f64) / 50.0 - 1.0).collect();
//! let init = InitialCondition::new(u[..2].to_vec(), vec![1.0, 1.0]).unwrap();
//! let mut y = vec![1.0, 1.0];
//! y.extend(simulate_true(&params, &basis, &init, &u[2..]).unwrap());
//! let data = Trajectory::new(u, y).unwrap();
//!
//! let theta = predictor::identify_parameters(&data, 2, &basis).unwrap();
//! assert!((theta.theta_nl[0] - 1.0).abs() < 1e-8);
//! ```

pub mod basis;
pub mod error;
pub mod experiment;
pub mod hankel;
pub mod linalg;
pub mod predictor;
pub mod reference;
pub mod system;
pub mod trajectory;

pub use basis::{BasisExpr, BasisSet};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, ExperimentSummary};
pub use linalg::{DenseMatrix, SolveMode, SolveOptions, Vector};
pub use predictor::{DataDrivenPredictor, PredictionConfig};
pub use system::{InitialCondition, NoiseSpec, SystemParams};
pub use trajectory::Trajectory;
