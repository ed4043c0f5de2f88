//! Seeded Monte Carlo harness: many noisy data sets, one shared initial
//! condition and future input, statistics of the predicted trajectories.
//!
//! Seeds: the reference input uses `base_seed` (stream 2). Trial `d` draws
//! its input from `base_seed + d` (stream 1) and its noise from
//! `base_seed + d` (stream 0), so trial results do not depend on scheduling.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::hankel::min_prediction_length;
use crate::linalg::{SolveMode, SolveOptions};
use crate::predictor::{DataDrivenPredictor, PredictionConfig};
use crate::system::{
    add_noise, seeded_gaussian, simulate_noisy, simulate_true, InitialCondition, NoiseSpec, SystemParams,
};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(flatten)]
    pub params: SystemParams,
    pub basis: BasisSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputDist {
    #[default]
    StandardNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    #[serde(default)]
    pub dist: InputDist,
    #[serde(default = "unit")]
    pub scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for InputSpec {
    fn default() -> Self {
        InputSpec { dist: InputDist::StandardNormal, scale: 1.0 }
    }
}

/// Where the noise enters the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// `ỹ(t) = f(x_ỹ(t), x_u(t)) + μ r(t)`: noisy outputs feed back.
    #[default]
    Equation,
    /// `ỹ(t) = y(t) + μ r(t)` on top of a noise-free simulation.
    Output,
}

/// Fields missing from a JSON config take their values from
/// [`reference::default_config`](crate::reference::default_config).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    /// First `system.ell` outputs of every simulated trajectory.
    pub y_start: Vec<f64>,
    pub fit_basis: BasisSet,
    pub ell: usize,
    pub t_true: usize,
    pub t_data: usize,
    pub trials: usize,
    pub mu: f64,
    pub horizon: usize,
    pub solve: SolveOptions,
    pub lambda_grid: Vec<f64>,
    pub base_seed: u64,
    pub input: InputSpec,
    pub noise_model: NoiseModel,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        crate::reference::default_config()
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.system.params.validate().map_err(|e| Error::Config(format!("system: {e}")))?;
        self.system.params.check_basis(&self.system.basis).map_err(|e| Error::Config(format!("system: {e}")))?;
        if self.y_start.len() != self.system.params.ell {
            return bad(format!("y_start needs {} samples, got {}", self.system.params.ell, self.y_start.len()));
        }
        if self.y_start.iter().any(|v| !v.is_finite()) {
            return bad("y_start must be finite".into());
        }
        if self.ell == 0 {
            return bad("ell must be at least 1".into());
        }
        if self.fit_basis.max_lag() > self.ell {
            return bad(format!("fit_basis references lag {} beyond ell {}", self.fit_basis.max_lag(), self.ell));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be nonnegative, got {}", self.mu));
        }
        if self.t_true < self.t_data + self.ell + self.horizon {
            return bad(format!(
                "t_true = {} is shorter than t_data + ell + horizon = {}",
                self.t_true,
                self.t_data + self.ell + self.horizon
            ));
        }
        let need = min_prediction_length(self.ell, self.fit_basis.len());
        if self.t_data < need {
            return bad(format!("t_data = {} is below the {need} samples the fit needs", self.t_data));
        }
        if self.t_data <= self.system.params.ell {
            return bad("t_data must exceed the system lag".into());
        }
        if !(self.input.scale.is_finite() && self.input.scale >= 0.0) {
            return bad("input scale must be finite and nonnegative".into());
        }
        self.solve.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.solve.mode != SolveMode::MinNorm && self.lambda_grid.is_empty() {
            return bad("lambda_grid must be nonempty for regularized solves".into());
        }
        if self.lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return bad("lambda_grid entries must be finite and nonnegative".into());
        }
        Ok(())
    }

    fn simulate(&self, u: &[f64], noise: Option<NoiseSpec>) -> Result<Trajectory> {
        let sys_ell = self.system.params.ell;
        let init = InitialCondition::new(u[..sys_ell].to_vec(), self.y_start.clone())?;
        let tail = &u[sys_ell..];
        let params = &self.system.params;
        let basis = &self.system.basis;
        let y_tail = match (noise, self.noise_model) {
            (None, _) => simulate_true(params, basis, &init, tail)?,
            (Some(spec), NoiseModel::Equation) => simulate_noisy(params, basis, &init, tail, &spec)?,
            (Some(spec), NoiseModel::Output) => add_noise(&simulate_true(params, basis, &init, tail)?, &spec),
        };
        let mut y = self.y_start.clone();
        y.extend(y_tail);
        Trajectory::new(u.to_vec(), y)
    }

    /// Noise-free reference trajectory of length `t_true`.
    pub fn reference_trajectory(&self) -> Result<Trajectory> {
        let u = seeded_gaussian(self.base_seed, 2, self.t_true, self.input.scale);
        self.simulate(&u, None)
    }

    /// Noisy data set of trial `index`, length `t_data`.
    pub fn trial_data(&self, index: usize) -> Result<Trajectory> {
        let seed = self.base_seed.wrapping_add(index as u64);
        let u = seeded_gaussian(seed, 1, self.t_data, self.input.scale);
        self.simulate(&u, Some(NoiseSpec { mu: self.mu, seed }))
    }
}

/// Initial window, future input and true future output cut from the
/// reference trajectory: the last `horizon` samples are predicted, the `ell`
/// samples just before them form the initial condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionTask {
    pub init: InitialCondition,
    pub future_input: Vec<f64>,
    pub true_future: Vec<f64>,
}

impl PredictionTask {
    pub fn from_reference(reference: &Trajectory, ell: usize, horizon: usize) -> Self {
        let t = reference.len();
        let start = t - horizon;
        PredictionTask {
            init: InitialCondition {
                u_past: reference.u()[start - ell..start].to_vec(),
                y_past: reference.y()[start - ell..start].to_vec(),
            },
            future_input: reference.u()[start..].to_vec(),
            true_future: reference.y()[start..].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial_index: usize,
    /// `None` when the trial failed (diverged or numerically broke down).
    pub predicted: Option<Vec<f64>>,
    pub rmse_vs_true: Option<f64>,
    pub unconverged_steps: usize,
    pub error: Option<String>,
}

impl TrialResult {
    pub fn diverged(&self) -> bool {
        self.predicted.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub lambda: f64,
    /// `‖mean prediction − true future‖₂`, `None` if every trial failed.
    pub mean_error: Option<f64>,
    pub median_rmse: Option<f64>,
    pub diverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub future_input: Vec<f64>,
    pub true_future: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub median: Vec<f64>,
    pub trials: Vec<TrialResult>,
    /// RMSE of every non-diverged trial, in trial order.
    pub rmse: Vec<f64>,
    pub median_rmse: Option<f64>,
    pub mean_error: Option<f64>,
    pub diverged: usize,
    pub chosen_lambda: Option<f64>,
    pub grid: Vec<GridPoint>,
}

impl ExperimentSummary {
    pub fn completed(&self) -> usize {
        self.trials.len() - self.diverged
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (ss / a.len() as f64).sqrt()
}

fn run_trial(cfg: &ExperimentConfig, task: &PredictionTask, index: usize) -> TrialResult {
    let pred_cfg = PredictionConfig::new(cfg.solve, cfg.horizon);
    let outcome = cfg
        .trial_data(index)
        .and_then(|data| DataDrivenPredictor::new(&data, cfg.ell, &cfg.fit_basis))
        .and_then(|p| p.predict(&task.init, &task.future_input, &pred_cfg));
    match outcome {
        Ok(pred) => TrialResult {
            trial_index: index,
            rmse_vs_true: Some(rmse(&pred.y, &task.true_future)),
            predicted: Some(pred.y),
            unconverged_steps: pred.unconverged_steps,
            error: None,
        },
        Err(e) => TrialResult {
            trial_index: index,
            predicted: None,
            rmse_vs_true: None,
            unconverged_steps: 0,
            error: Some(e.to_string()),
        },
    }
}

fn summarize(cfg: &ExperimentConfig, task: PredictionTask, trials: Vec<TrialResult>) -> ExperimentSummary {
    let ok: Vec<&Vec<f64>> = trials.iter().filter_map(|t| t.predicted.as_ref()).collect();
    let n = ok.len();
    let horizon = cfg.horizon;
    let (mut mean, mut std, mut med) = (Vec::new(), Vec::new(), Vec::new());
    if n > 0 {
        for step in 0..horizon {
            let col: Vec<f64> = ok.iter().map(|p| p[step]).collect();
            let m = col.iter().sum::<f64>() / n as f64;
            let var = if n > 1 { col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
            mean.push(m);
            std.push(var.sqrt());
            med.push(median(&col).expect("nonempty column"));
        }
    }
    let rmse: Vec<f64> = trials.iter().filter_map(|t| t.rmse_vs_true).collect();
    let mean_error =
        (n > 0).then(|| mean.iter().zip(&task.true_future).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt());
    ExperimentSummary {
        config: cfg.clone(),
        future_input: task.future_input,
        true_future: task.true_future,
        mean,
        std,
        median: med,
        median_rmse: median(&rmse),
        rmse,
        mean_error,
        diverged: trials.len() - n,
        trials,
        chosen_lambda: None,
        grid: Vec::new(),
    }
}

/// Runs every trial with `cfg.solve` and aggregates the predictions.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let reference = cfg.reference_trajectory()?;
    let task = PredictionTask::from_reference(&reference, cfg.ell, cfg.horizon);
    let trials: Vec<TrialResult> = (0..cfg.trials).into_par_iter().map(|d| run_trial(cfg, &task, d)).collect();
    Ok(summarize(cfg, task, trials))
}

/// Runs the experiment for every `λ` in the grid with identical seeds and
/// keeps the one whose mean prediction is closest to the true future. Ties
/// go to the smaller `λ`.
///
/// This selects `λ` against the true trajectory, which is only known inside
/// a simulation study.
pub fn grid_search_lambda(cfg: &ExperimentConfig) -> Result<(f64, ExperimentSummary)> {
    cfg.validate()?;
    if cfg.lambda_grid.is_empty() {
        return Err(Error::Config("lambda_grid is empty".into()));
    }
    if cfg.solve.mode == SolveMode::MinNorm {
        return Err(Error::Config("grid search needs a ridge or lasso solve".into()));
    }
    let mut grid = cfg.lambda_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut best: Option<(f64, ExperimentSummary)> = None;
    let mut points = Vec::with_capacity(grid.len());
    for &lambda in &grid {
        let mut run_cfg = cfg.clone();
        run_cfg.solve = SolveOptions { lambda, ..cfg.solve };
        let summary = run_experiment(&run_cfg)?;
        points.push(GridPoint {
            lambda,
            mean_error: summary.mean_error,
            median_rmse: summary.median_rmse,
            diverged: summary.diverged,
        });
        let better = match (&best, summary.mean_error) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some((_, b)), Some(e)) => b.mean_error.is_none_or(|be| e < be),
        };
        if better || best.is_none() {
            best = Some((lambda, summary));
        }
    }
    let (lambda, mut summary) = best.expect("grid is nonempty");
    summary.config = cfg.clone();
    summary.chosen_lambda = Some(lambda);
    summary.grid = points;
    Ok((lambda, summary))
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    fs::File::create(path).map(std::io::BufWriter::new).map_err(|source| Error::Io { path: path.into(), source })
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.into(), source })
}

/// Writes `summary.csv`, `trials.csv`, `rmse.csv`, `config.json` and, after
/// a grid search, `grid.csv` into `dir`.
pub fn emit_outputs(summary: &ExperimentSummary, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })?;

    let steps = summary.true_future.len();
    let cell = |v: Option<&f64>| v.map(f64::to_string).unwrap_or_default();
    write_csv(
        &dir.join("summary.csv"),
        &["step", "true", "mean", "std", "median"],
        (0..steps).map(|i| {
            vec![
                (i + 1).to_string(),
                summary.true_future[i].to_string(),
                cell(summary.mean.get(i)),
                cell(summary.std.get(i)),
                cell(summary.median.get(i)),
            ]
        }),
    )?;

    write_csv(
        &dir.join("trials.csv"),
        &["trial", "step", "value"],
        summary.trials.iter().filter_map(|t| t.predicted.as_ref().map(|p| (t.trial_index, p))).flat_map(|(idx, p)| {
            p.iter().enumerate().map(move |(i, v)| vec![idx.to_string(), (i + 1).to_string(), v.to_string()])
        }),
    )?;

    write_csv(
        &dir.join("rmse.csv"),
        &["trial", "rmse", "diverged"],
        summary
            .trials
            .iter()
            .map(|t| vec![t.trial_index.to_string(), cell(t.rmse_vs_true.as_ref()), t.diverged().to_string()]),
    )?;

    if !summary.grid.is_empty() {
        write_csv(
            &dir.join("grid.csv"),
            &["lambda", "mean_error", "median_rmse", "diverged"],
            summary.grid.iter().map(|g| {
                vec![
                    g.lambda.to_string(),
                    cell(g.mean_error.as_ref()),
                    cell(g.median_rmse.as_ref()),
                    g.diverged.to_string(),
                ]
            }),
        )?;
    }

    let path = dir.join("config.json");
    let mut echo =
        serde_json::to_value(&summary.config).map_err(|source| Error::Json { path: path.clone(), source })?;
    if let (Some(obj), Some(l)) = (echo.as_object_mut(), summary.chosen_lambda) {
        obj.insert("chosen_lambda".into(), serde_json::json!(l));
    }
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &echo).map_err(|source| Error::Json { path: path.clone(), source })?;
    writeln!(w).and_then(|_| w.flush()).map_err(|source| Error::Io { path, source })
}
