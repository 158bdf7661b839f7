//! `tsplines` command-line front end.
//!
//! Exit status: 0 success, 2 configuration, 3 input parse, 4 numerical
//! failure, 5 domain or coverage. Failures print a single
//! `error code=.. kind=.. message=".."` line on stderr.

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tsplines::synth::DecompositionConfig;

use commands::{EpochSource, FusePaths};
use config::{FitArgs, RunConfig, ThresholdArgs};
use failure::Failure;

#[derive(Parser)]
#[command(name = "tsplines", version, about = "Penalized B-spline fitting for irregular time series")]
struct Cli {
    /// More log output (repeat for more); RUST_LOG overrides
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a series (or every CSV in a directory) and save the model
    Fit {
        /// `time,value[,sigma]` CSV
        #[arg(long, required_unless_present = "batch", conflicts_with = "batch")]
        input: Option<PathBuf>,
        /// Model JSON to write
        #[arg(long, required_unless_present = "batch")]
        output: Option<PathBuf>,
        /// Fit report JSON; printed to stdout when omitted
        #[arg(long)]
        report: Option<PathBuf>,
        /// Fit every `*.csv` in this directory concurrently
        #[arg(long, requires = "output_dir")]
        batch: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Evaluate a saved model and its derivative with confidence bands
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// CSV whose `time` (or `epoch`, or first) column lists the epochs
        #[arg(long, conflicts_with_all = ["monthly", "points"])]
        epochs: Option<PathBuf>,
        /// First day of every month inside the model domain
        #[arg(long, conflicts_with = "points")]
        monthly: bool,
        /// Evenly spaced epochs over the model domain
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, default_value_t = tsplines::model::DEFAULT_ALPHA)]
        alpha: f64,
        /// `epoch,mean,std,ci_lo,ci_hi`
        #[arg(long)]
        output: PathBuf,
        /// Same columns for the first derivative
        #[arg(long)]
        derivative_output: Option<PathBuf>,
    },
    /// Two-level outlier rejection followed by a refit
    Outliers {
        #[arg(long)]
        input: PathBuf,
        /// Receives flags.csv, clean.csv, model.json and report.json
        #[arg(long)]
        output_dir: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
    },
    /// Combine sparse observations with a dense model series
    Fuse {
        #[arg(long)]
        observations: PathBuf,
        #[arg(long)]
        dense: PathBuf,
        /// Reconstruction at the dense epochs: `epoch,mean,std,ci_lo,ci_hi`
        #[arg(long)]
        output: PathBuf,
        /// Difference series at the observation epochs
        #[arg(long)]
        difference: Option<PathBuf>,
        /// Spline model of the difference series
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Spline against polynomial and interpolation baselines
    Compare {
        #[arg(long)]
        input: PathBuf,
        /// Noise-free `time,value` samples for RMSE-vs-truth
        #[arg(long)]
        truth: Option<PathBuf>,
        /// `model,rmse_data,rmse_truth`
        #[arg(long)]
        output: PathBuf,
        /// Side-by-side predictions of every model
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Write seeded synthetic datasets
    Synth {
        #[command(subcommand)]
        dataset: Dataset,
    },
}

#[derive(Subcommand)]
enum Dataset {
    /// Gramacy-Lee function at uniform random epochs plus Gaussian noise
    GramacyLee {
        #[arg(long, default_value_t = 150)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
        /// Noise-free values on an even grid over the sampled span
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 1001)]
        truth_points: usize,
    },
    /// Dense seasonal series, sparse observations and the noise-free sum
    Decomposition {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 25)]
        observations: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        /// Receives observations.csv, dense.csv and truth.csv
        #[arg(long)]
        output_dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Fit {
            input,
            output,
            report,
            batch,
            output_dir,
            fit,
        } => {
            let config = RunConfig::from_args(&fit, None)?;
            match (batch, input, output) {
                (Some(dir), _, _) => commands::run_fit_batch(&config, &dir, &output_dir.expect("required by clap")),
                (None, Some(input), Some(output)) => commands::run_fit(&config, &input, &output, report.as_deref()),
                _ => Err(Failure::config("fit needs --input and --output, or --batch and --output-dir")),
            }
        }
        Command::Predict {
            model,
            epochs,
            monthly,
            points,
            alpha,
            output,
            derivative_output,
        } => {
            let source = match (epochs, monthly, points) {
                (Some(p), _, _) => EpochSource::File(p),
                (None, true, _) => EpochSource::Monthly,
                (None, false, k) => EpochSource::Points(k.unwrap_or(200)),
            };
            commands::run_predict(&model, &source, alpha, &output, derivative_output.as_deref())
        }
        Command::Outliers {
            input,
            output_dir,
            fit,
            thresholds,
        } => {
            let config = RunConfig::from_args(&fit, Some(&thresholds))?;
            commands::run_outliers(&config, &input, &output_dir)
        }
        Command::Fuse {
            observations,
            dense,
            output,
            difference,
            model,
            fit,
        } => {
            let config = RunConfig::from_args(&fit, None)?;
            let paths = FusePaths {
                observations: &observations,
                dense: &dense,
                output: &output,
                difference: difference.as_deref(),
                model: model.as_deref(),
            };
            commands::run_fuse(&config, &paths)
        }
        Command::Compare {
            input,
            truth,
            output,
            predictions,
            fit,
        } => {
            let config = RunConfig::from_args(&fit, None)?;
            commands::run_compare(&config, &input, truth.as_deref(), &output, predictions.as_deref())
        }
        Command::Synth { dataset } => match dataset {
            Dataset::GramacyLee {
                n,
                noise,
                seed,
                output,
                truth,
                truth_points,
            } => commands::run_synth_gramacy_lee(n, noise, seed, &output, truth.as_deref().map(|p| (p, truth_points))),
            Dataset::Decomposition {
                seed,
                observations,
                noise,
                output_dir,
            } => {
                let cfg = DecompositionConfig {
                    n_observations: observations,
                    noise_sd: noise,
                    ..DecompositionConfig::default()
                };
                commands::run_synth_decomposition(&cfg, seed, &output_dir)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}
