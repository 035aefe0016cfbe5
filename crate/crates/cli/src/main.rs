use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod error;

use error::CliError;

#[derive(Parser)]
#[command(name = "kronsample", version, about = "Bayesian inference for separable covariance matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by `generate` and `fit`.
#[derive(clap::Args)]
struct RunArgs {
    /// TOML run configuration; every field is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `seed` from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate factors and observations; writes data.csv and truth.json.
    Generate(RunArgs),
    /// Run a sampler; writes chains.csv, acf.csv and summary.json.
    Fit {
        #[command(flatten)]
        run: RunArgs,
        /// Observations CSV; overrides `input` from the configuration.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// KS statistics of each chain against the first, plus ESS/it per chain.
    Compare {
        #[arg(required = true, num_args = 2..)]
        chains: Vec<PathBuf>,
        /// Exit with status 4 unless every KS statistic is below this.
        #[arg(long)]
        threshold: Option<f64>,
        /// Statistics checked against the threshold (default: all).
        #[arg(long = "stat")]
        stats: Vec<String>,
        /// Directory for compare.json; prints to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Autocorrelations and ESS of a chains CSV; writes acf.csv and
    /// diagnostics.json.
    Diagnose {
        chains: PathBuf,
        #[arg(long, default_value_t = 40)]
        max_lag: usize,
        /// Defaults to the directory holding the chains file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => {
            let cfg = commands::load_config(a.config.as_deref(), a.seed, a.out)?;
            commands::generate(&cfg)
        }
        Command::Fit { run: a, input } => {
            let mut cfg = commands::load_config(a.config.as_deref(), a.seed, a.out)?;
            if input.is_some() {
                cfg.input = input;
            }
            commands::fit(&cfg)
        }
        Command::Compare { chains, threshold, stats, out } => {
            commands::compare(&chains, threshold, &stats, out.as_deref())
        }
        Command::Diagnose { chains, max_lag, out } => commands::diagnose(&chains, max_lag, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
