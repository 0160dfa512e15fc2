use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use churnsim::config::RunConfig;
use churnsim::Error;

mod commands;

#[derive(Debug, Parser)]
#[command(
    name = "churnsim",
    version,
    about = "Simulate and fit level pass and churn rates"
)]
struct Cli {
    /// Config file; built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic truth dataset and its episode logs.
    Synth,
    /// Fit the feature regression and derive level difficulties.
    FitBaseline,
    /// Run the population simulation with the configured parameters.
    Simulate,
    /// Fit the simulation parameters on every level.
    Fit,
    /// Cross-validate the fitted simulation.
    Crossval {
        /// Hold out only the last fifth of the levels.
        #[arg(long)]
        tail_holdout: bool,
    },
    /// Cross-validate each ablation variant.
    Ablate,
    /// Compare fits on truth-derived difficulties with model difficulties.
    OracleDiff,
    /// Write pass-versus-churn scatter data.
    Report,
}

const EXIT_MISSING: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_INTERNAL: u8 = 70;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::MissingFile(_) => EXIT_MISSING,
        Error::Schema { .. } | Error::LevelMismatch(_) => EXIT_DATA,
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_INTERNAL,
    }
}

fn run(cli: Cli) -> churnsim::Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output.dir = out;
    }
    let written = match cli.command {
        Command::Synth => commands::synth(&config)?,
        Command::FitBaseline => commands::fit_baseline(&config)?,
        Command::Simulate => commands::simulate(&config)?,
        Command::Fit => commands::fit(&config)?,
        Command::Crossval { tail_holdout } => commands::crossval(&config, tail_holdout)?,
        Command::Ablate => commands::ablate(&config)?,
        Command::OracleDiff => commands::oracle_diff(&config)?,
        Command::Report => commands::report(&config)?,
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
