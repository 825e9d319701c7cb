//! Command-line front end for the `nbrig` library.
//!
//! Every command builds its whole artifact in memory before anything is
//! written, so a failure leaves standard output empty.

pub mod args;
pub mod commands;
pub mod config;
pub mod format;
pub mod ingest;

use std::fs;

use anyhow::{Context, Result};

pub use args::{Cli, Command, Flags, Format, ModelSelector};
pub use commands::Artifact;
pub use config::RunConfig;
pub use ingest::{ingest_counts, ingest_severity, InputError};

pub fn execute(cfg: &RunConfig) -> Result<Artifact> {
    match cfg.command {
        Command::Fit => commands::cmd_fit(cfg),
        Command::Compare => commands::cmd_compare(cfg),
        Command::Pmf => commands::cmd_pmf(cfg),
        Command::Aggregate => commands::cmd_aggregate(cfg),
        Command::Simulate => commands::cmd_simulate(cfg),
    }
}

/// Resolves the configuration, runs the command and writes the artifact to
/// `--output`, returning the text for standard output (empty when written to
/// a file) and the diagnostics.
pub fn run(cli: Cli) -> Result<Artifact> {
    let (command, flags) = cli.command.split();
    let cfg = RunConfig::resolve(command, flags)?;
    let artifact = execute(&cfg)?;
    match &cfg.output {
        Some(path) => {
            fs::write(path, &artifact.body)
                .with_context(|| format!("cannot write {}", path.display()))?;
            Ok(Artifact {
                body: String::new(),
                diagnostics: artifact.diagnostics,
            })
        }
        None => Ok(artifact),
    }
}
