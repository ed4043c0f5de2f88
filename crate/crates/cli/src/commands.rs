use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ddsim_core::experiment::{emit_outputs, grid_search_lambda, run_experiment, ExperimentSummary, SystemSpec};
use ddsim_core::hankel::check_identifiability;
use ddsim_core::predictor::{check_equivalence, identify_parameters, DataDrivenPredictor};
use ddsim_core::system::{add_noise, seeded_gaussian, simulate_true, NoiseSpec};
use ddsim_core::trajectory::CsvError;
use ddsim_core::{reference, Error, ExperimentConfig, PredictionConfig, SolveMode, SolveOptions, Trajectory};
use serde::Serialize;

use crate::config::{load_json, EquivConfig, InputSource, ModelConfig, PredictConfig, SimulateConfig};
use crate::{Command, SolveArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error("data-driven and model-based steps differ by {0:e}")]
    NotEquivalent(f64),
}

impl CliError {
    /// 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::NotEquivalent(_) => 2,
            _ => 1,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn run(command: Command) -> CliResult {
    match command {
        Command::Simulate { config, out, seed } => simulate(&config, out.as_deref(), seed),
        Command::Noise { data, mu, seed, out } => noise(&data, mu, seed, out.as_deref()),
        Command::Rank { data, config, tol, out } => rank(&data, &config, tol, out.as_deref()),
        Command::Identify { data, config, out } => identify(&data, &config, out.as_deref()),
        Command::Predict { data, config, solve, out } => predict(&data, &config, &solve, out.as_deref()),
        Command::Equiv { data, config, tol, out } => equiv(&data, &config, tol, out.as_deref()),
        Command::Experiment { config, out, seed, solve } => experiment(config.as_deref(), &out, seed, &solve),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|source| Error::Io { path: path.into(), source })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })?
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|source| Error::Json { path: out.map(Into::into).unwrap_or_else(|| "<stdout>".into()), source })?;
    text.push('\n');
    emit(out, text.as_bytes())
}

fn emit_trajectory(out: Option<&Path>, traj: &Trajectory) -> CliResult {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf)?;
    emit(out, &buf)
}

fn apply_solve_args(mut opts: SolveOptions, args: &SolveArgs) -> SolveOptions {
    if let Some(mode) = args.mode {
        opts.mode = mode;
    }
    if let Some(lambda) = args.lambda {
        opts.lambda = lambda;
    }
    if let Some(tol) = args.tol {
        opts.tol = tol;
    }
    opts
}

fn simulate(config: &Path, out: Option<&Path>, seed: u64) -> CliResult {
    let cfg: SimulateConfig = load_json(config)?;
    let SystemSpec { params, basis } = &cfg.system;
    let u_f = match cfg.input {
        InputSource::Samples(u) => u,
        InputSource::Random { len, scale } => {
            if !(scale.is_finite() && scale >= 0.0) {
                return Err(Error::Config(format!("input scale must be finite and nonnegative, got {scale}")).into());
            }
            seeded_gaussian(seed, 0, len, scale)
        }
    };
    let y_f = simulate_true(params, basis, &cfg.init, &u_f)?;
    let u = cfg.init.u_past.iter().chain(&u_f).copied().collect();
    let y = cfg.init.y_past.iter().chain(&y_f).copied().collect();
    emit_trajectory(out, &Trajectory::new(u, y)?)
}

fn noise(data: &Path, mu: f64, seed: u64, out: Option<&Path>) -> CliResult {
    let traj = Trajectory::load(data)?;
    let spec = NoiseSpec::new(mu, seed)?;
    let noisy = traj.with_output(add_noise(traj.y(), &spec))?;
    emit_trajectory(out, &noisy)
}

fn rank(data: &Path, config: &Path, tol: Option<f64>, out: Option<&Path>) -> CliResult {
    let traj = Trajectory::load(data)?;
    let cfg: ModelConfig = load_json(config)?;
    let l = cfg.rows.unwrap_or(cfg.ell + 1);
    let report = check_identifiability(&traj, l, &cfg.basis, cfg.ell, tol)?;
    emit_json(out, &report)
}

fn identify(data: &Path, config: &Path, out: Option<&Path>) -> CliResult {
    let traj = Trajectory::load(data)?;
    let cfg: ModelConfig = load_json(config)?;
    let params = identify_parameters(&traj, cfg.ell, &cfg.basis)?;
    emit_json(out, &SystemSpec { params, basis: cfg.basis })
}

fn predict(data: &Path, config: &Path, args: &SolveArgs, out: Option<&Path>) -> CliResult {
    let traj = Trajectory::load(data)?;
    let cfg: PredictConfig = load_json(config)?;
    let solve = apply_solve_args(cfg.solve.unwrap_or_default(), args);
    let mut pred_cfg = PredictionConfig::new(solve, cfg.future_input.len());
    if let Some(bound) = cfg.divergence_bound {
        pred_cfg.divergence_bound = bound;
    }
    let predictor = DataDrivenPredictor::new(&traj, cfg.init.lag(), &cfg.basis)?;
    let pred = predictor.predict(&cfg.init, &cfg.future_input, &pred_cfg)?;
    if pred.unconverged_steps > 0 {
        eprintln!("warning: solver hit its iteration cap in {} step(s)", pred.unconverged_steps);
    }
    let mut text = String::from("step,u,y\n");
    for (i, (u, y)) in cfg.future_input.iter().zip(&pred.y).enumerate() {
        text.push_str(&format!("{},{u},{y}\n", i + 1));
    }
    emit(out, text.as_bytes())
}

fn equiv(data: &Path, config: &Path, tol: f64, out: Option<&Path>) -> CliResult {
    let traj = Trajectory::load(data)?;
    let cfg: EquivConfig = load_json(config)?;
    let report = check_equivalence(&traj, &cfg.basis, &cfg.init, cfg.u_next, tol)?;
    emit_json(out, &report)?;
    if report.equivalent {
        Ok(())
    } else {
        Err(CliError::NotEquivalent(report.abs_diff))
    }
}

#[derive(Serialize)]
struct RunReport {
    trials: usize,
    completed: usize,
    diverged: usize,
    median_rmse: Option<f64>,
    mean_error: Option<f64>,
    chosen_lambda: Option<f64>,
}

fn experiment(config: Option<&Path>, out: &Path, seed: Option<u64>, args: &SolveArgs) -> CliResult {
    let mut cfg = match config {
        Some(path) => ExperimentConfig::load(path)?,
        None => reference::default_config(),
    };
    if let Some(seed) = seed {
        cfg.base_seed = seed;
    }
    cfg.solve = apply_solve_args(cfg.solve, args);
    let search = cfg.solve.mode != SolveMode::MinNorm && args.lambda.is_none();
    let summary: ExperimentSummary = if search { grid_search_lambda(&cfg)?.1 } else { run_experiment(&cfg)? };
    emit_outputs(&summary, out)?;
    emit_json(
        None,
        &RunReport {
            trials: summary.trials.len(),
            completed: summary.completed(),
            diverged: summary.diverged,
            median_rmse: summary.median_rmse,
            mean_error: summary.mean_error,
            chosen_lambda: summary.chosen_lambda,
        },
    )
}
