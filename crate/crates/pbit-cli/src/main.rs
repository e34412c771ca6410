use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use pbit::config::ExperimentConfig;
use pbit::experiments::{self, Table};
use pbit::Error;

/// Runs one p-bit experiment and writes its CSV.
#[derive(Debug, Parser)]
#[command(name = "pbit", version)]
struct Cli {
    command: Command,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// 60k-image training and the 784x200x10 network.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Sigmoid,
    Trace,
    Tune,
    Knee,
    Energy,
    DbnTrain,
    DbnEval,
}

const CONFIG_ERROR: u8 = 2;
const DATA_ERROR: u8 = 3;
const CAP_EXCEEDED: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParams(_) | Error::WrongMode { .. } => CONFIG_ERROR,
        Error::Io { .. }
        | Error::BadMagic { .. }
        | Error::Truncated { .. }
        | Error::CountMismatch { .. }
        | Error::EmptyDataset
        | Error::ModelFormat(_) => DATA_ERROR,
        Error::WindowCapExceeded { .. } => CAP_EXCEEDED,
        _ => 1,
    }
}

fn run(cli: &Cli) -> Result<String, Error> {
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.full_scale |= cli.full_scale;
    let table: Table = match cli.command {
        Command::Sigmoid => experiments::cmd_sigmoid(&cfg)?,
        Command::Trace => experiments::cmd_trace(&cfg)?,
        Command::Tune => experiments::cmd_tune(&cfg)?,
        Command::Knee => experiments::cmd_knee(&cfg)?,
        Command::Energy => experiments::cmd_energy(&cfg)?,
        Command::DbnTrain => {
            let (_, table) = experiments::cmd_dbn_train(&cfg)?;
            eprintln!("model written to {}", cfg.model_path().display());
            table
        }
        Command::DbnEval => experiments::cmd_dbn_eval(&cfg)?,
    };
    Ok(table.render(&cfg.hash()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let csv = match run(&cli) {
        Ok(csv) => csv,
        Err(e) => {
            eprintln!("pbit: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    match &cli.out {
        Some(path) => match fs::write(path, csv) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("pbit: cannot write {}: {e}", path.display());
                ExitCode::FAILURE
            }
        },
        None => {
            print!("{csv}");
            ExitCode::SUCCESS
        }
    }
}
