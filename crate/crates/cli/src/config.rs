//! JSON inputs of the individual subcommands.

use std::path::Path;

use ddsim_core::experiment::SystemSpec;
use ddsim_core::{BasisSet, Error, InitialCondition, Result, SolveOptions};
use serde::de::DeserializeOwned;
use serde::Deserialize;

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
}

/// Explicit samples or a seeded standard-normal draw.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum InputSource {
    Samples(Vec<f64>),
    Random {
        len: usize,
        #[serde(default = "unit")]
        scale: f64,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub system: SystemSpec,
    pub init: InitialCondition,
    pub input: InputSource,
}

/// Shared by `rank` and `identify`. `rows` is the Hankel depth `L` and
/// defaults to `ell + 1`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub ell: usize,
    pub basis: BasisSet,
    #[serde(default)]
    pub rows: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    pub basis: BasisSet,
    pub init: InitialCondition,
    pub future_input: Vec<f64>,
    #[serde(default)]
    pub solve: Option<SolveOptions>,
    #[serde(default)]
    pub divergence_bound: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivConfig {
    pub basis: BasisSet,
    pub init: InitialCondition,
    pub u_next: f64,
}
