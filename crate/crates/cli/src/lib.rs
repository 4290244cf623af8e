//! `priceflow` command-line surface.
//!
//! Exit codes: 0 success, 1 the run diverged or a certification failed,
//! 2 bad arguments, config or input files.

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod trace_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok,
    Fail,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Ok => 0,
            ExitStatus::Fail => 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed trace: {0}")]
    Trace(String),
    #[error("bad arguments: {0}")]
    Args(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn csv(e: csv::Error) -> Self {
        CliError::Trace(e.to_string())
    }

    pub(crate) fn stdout(source: std::io::Error) -> Self {
        CliError::Io {
            path: "<stdout>".into(),
            source,
        }
    }

    pub fn code(&self) -> i32 {
        2
    }
}

#[derive(Debug, Parser)]
#[command(name = "priceflow", version, about = "Dual price iteration, descent certification and arrowhead spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the price iteration and write a trace CSV.
    Simulate(commands::SimulateArgs),
    /// Check a trace CSV against the descent inequalities.
    Certify(commands::CertifyArgs),
    /// Print the Hessian spectrum and convexity verdict as JSON.
    Spectra(commands::SpectraArgs),
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a, stdout),
        Command::Certify(a) => commands::certify(a, stdout),
        Command::Spectra(a) => commands::spectra(a, stdout),
    };
    match result {
        Ok(status) => status.code(),
        Err(e) => {
            let _ = writeln!(stderr, "priceflow: {e}");
            e.code()
        }
    }
}
