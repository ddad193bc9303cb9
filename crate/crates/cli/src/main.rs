//! `ircsc`: train the desk-scale task model, validate channel BER, fit the
//! performance mapping, make single rate decisions, and run comparison
//! sweeps. Every command is deterministic given its config file and seeds;
//! machine output goes to files or stdout CSV/JSON, human summaries to
//! stdout.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 runtime or numerical
//! failure.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ircsc",
    version,
    about = "Importance-aware rate control simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the task model from a config file and write it as JSON.
    Train(TrainArgs),
    /// Print theoretical vs Monte-Carlo BER as CSV (snr_db,theoretical,empirical).
    Ber(BerArgs),
    /// Fit the rational performance mapping (or emit a built-in preset).
    Fit(FitArgs),
    /// Make one rate decision and print it as JSON.
    Decide(DecideArgs),
    /// Run the scheme-comparison SNR sweep and write records as CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: String,
    /// Output path for the trained model JSON.
    #[arg(long)]
    out: String,
    /// Also export the held-out test split as CSV (f0..fN,label).
    #[arg(long = "export-test-data")]
    export_test_data: Option<String>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct BerArgs {
    /// Channel family: awgn or rayleigh.
    #[arg(long)]
    family: String,
    /// Comma-separated SNR points in dB.
    #[arg(long = "snr-db", value_delimiter = ',', required = true)]
    snr_db: Vec<f64>,
    /// Bits per Monte-Carlo estimate.
    #[arg(long = "n-bits", default_value_t = 1_000_000)]
    n_bits: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FitArgs {
    /// Trained model JSON (unused with --preset).
    #[arg(long)]
    model: Option<String>,
    /// Experiment config JSON (unused with --preset).
    #[arg(long)]
    config: Option<String>,
    /// Output path for the mapping JSON.
    #[arg(long = "out-mapping")]
    out_mapping: String,
    /// Output path for the fit-points CSV (unused with --preset).
    #[arg(long = "out-points")]
    out_points: Option<String>,
    /// Emit a built-in mapping instead of fitting (e.g. paper-table-1).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct DecideArgs {
    /// Mapping JSON produced by `fit`.
    #[arg(long)]
    mapping: String,
    #[arg(long = "snr-db")]
    snr_db: f64,
    /// Task-performance threshold (same units as the fitted curve).
    #[arg(long)]
    tau: f64,
    /// Channel family: awgn or rayleigh.
    #[arg(long, default_value = "rayleigh")]
    family: String,
    /// Importance weights CSV (channel,weight,rank); alternative to --model.
    #[arg(long, conflicts_with_all = ["model", "dataset", "sample"])]
    weights: Option<String>,
    /// Feature length L for the rate formula when using --weights.
    #[arg(long, default_value_t = 8)]
    length: usize,
    /// Trained model JSON; importance comes from --dataset row --sample.
    #[arg(long, requires = "dataset")]
    model: Option<String>,
    /// Dataset CSV with the sample to analyze.
    #[arg(long, requires = "model")]
    dataset: Option<String>,
    /// Row index into --dataset.
    #[arg(long, default_value_t = 0)]
    sample: usize,
    /// Symbol interval Ts in seconds.
    #[arg(long, default_value_t = 0.05)]
    ts: f64,
    /// Inherent predictability P0.
    #[arg(long, default_value_t = 0.5)]
    p0: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// Trained model JSON.
    #[arg(long)]
    model: String,
    /// Mapping JSON.
    #[arg(long)]
    mapping: String,
    /// Experiment config JSON.
    #[arg(long)]
    config: String,
    /// Output path for the sweep CSV.
    #[arg(long)]
    out: String,
}

/// Command failure with its exit classification.
#[derive(Debug)]
pub struct CliError {
    message: String,
    exit: u8,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            exit: 2,
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            exit: 3,
        }
    }

    pub fn usage_from(e: impl std::fmt::Display) -> Self {
        Self::usage(e.to_string())
    }

    pub fn runtime_from(e: impl std::fmt::Display) -> Self {
        Self::runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(args) => {
            commands::train(&args.config, &args.out, args.export_test_data.as_deref())
        }
        Command::Ber(args) => commands::ber(&args.family, &args.snr_db, args.n_bits, args.seed),
        Command::Fit(args) => commands::fit(
            args.model.as_deref(),
            args.config.as_deref(),
            &args.out_mapping,
            args.out_points.as_deref(),
            args.preset.as_deref(),
        ),
        Command::Decide(args) => commands::decide(&args),
        Command::Sweep(args) => {
            commands::sweep(&args.model, &args.mapping, &args.config, &args.out)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit)
        }
    }
}

pub(crate) use DecideArgs as DecideRequest;
