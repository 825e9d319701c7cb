use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "nbrig", version, about = "NBRIG count models: fitting, PMF tables, aggregate losses, simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Fit the selected model(s) to a count dataset
    Fit(Flags),
    /// Fit models and report them sorted by AIC
    Compare(Flags),
    /// Tabulate the PMF at given parameters
    Pmf(Flags),
    /// Tabulate the aggregate-loss distribution for a severity file
    Aggregate(Flags),
    /// Draw counts, or aggregate losses when a severity file is given
    Simulate(Flags),
}

impl CommandArgs {
    pub fn split(self) -> (Command, Flags) {
        match self {
            CommandArgs::Fit(f) => (Command::Fit, f),
            CommandArgs::Compare(f) => (Command::Compare, f),
            CommandArgs::Pmf(f) => (Command::Pmf, f),
            CommandArgs::Aggregate(f) => (Command::Aggregate, f),
            CommandArgs::Simulate(f) => (Command::Simulate, f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fit,
    Compare,
    Pmf,
    Aggregate,
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSelector {
    Poisson,
    Nb,
    Nbrig,
    All,
}

/// Flags shared by every subcommand. All are optional so that a `--config`
/// file can fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Count data CSV (same as --input)
    #[arg(value_name = "INPUT")]
    pub input_pos: Option<PathBuf>,
    /// Count data CSV with columns count,frequency
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Write the result here instead of standard output
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum)]
    pub model: Option<ModelSelector>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    /// Largest count or loss to tabulate
    #[arg(long)]
    pub x_max: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Severity CSV with columns y,probability
    #[arg(long)]
    pub severity: Option<PathBuf>,
    /// JSON file with defaults for any of these flags
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Simplex diameter at which the optimizer stops
    #[arg(long)]
    pub tol: Option<f64>,
    /// Number of draws for simulate
    #[arg(short, long)]
    pub n: Option<usize>,
}
