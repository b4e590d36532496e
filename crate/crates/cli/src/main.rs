//! `trawl`: simulate trawl processes, estimate the trawl function, run the
//! T-dependence test, Monte Carlo experiments and kernel grids.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime error.

mod args;
mod cmd;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] trawl::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_config() => 2,
            CliError::Core(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn run(cli: Cli) -> CliResult<()> {
    let pool = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be ≥ 1".into())),
        Some(k) => Some(k),
        None => None,
    };
    match cli.command {
        Command::Simulate(a) => cmd::simulate::run(a, pool),
        Command::Estimate(a) => cmd::estimate::run(a),
        Command::Tdep(a) => cmd::tdep::run(a),
        Command::Mc(a) => cmd::mc::run(a, pool),
        Command::Kernels(a) => cmd::kernels::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
