//! `ddsim`: command-line access to the simulation, identification and
//! prediction routines of `ddsim-core`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ddsim_core::SolveMode;

#[derive(Debug, Parser)]
#[command(name = "ddsim", version, about = "Data-driven simulation of nonlinear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a system from an initial condition and an input.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for a random input.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Add white Gaussian noise of level `mu` to the outputs of a trajectory.
    Noise {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the rank of the extended Hankel matrix with its expected value.
    Rank {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Relative singular-value threshold.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the system parameters.
    Identify {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict future outputs directly from data.
    Predict {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that one data-driven step matches the model-based step.
    Equiv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Relative tolerance.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded Monte Carlo experiment and write its data files.
    Experiment {
        /// Experiment JSON (built-in reference setup when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        solve: SolveArgs,
    },
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    mode: Option<SolveMode>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Lasso convergence tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
