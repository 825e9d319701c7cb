use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use nbrig_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match nbrig_cli::run(cli) {
        Ok(artifact) => {
            for d in &artifact.diagnostics {
                eprintln!("warning: {d}");
            }
            let mut out = std::io::stdout().lock();
            if let Err(e) = out.write_all(artifact.body.as_bytes()).and_then(|_| out.flush()) {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
