mod args;
mod config;
mod error;
mod experiments;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format};
use error::{CliError, CliResult};
use experiments::Outcome;

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn run(cli: &Cli) -> CliResult<Option<bool>> {
    let echo = serde_json::to_value(&cli.command).expect("config serializes");
    let (outcome, default_format): (Outcome, Format) = match &cli.command {
        Command::ReportVersion => {
            emit(report::SCHEMA_VERSION);
            return Ok(None);
        }
        Command::Dim(a) => (experiments::dim(a, echo)?, Format::Json),
        Command::CrossedDim(a) => (experiments::crossed_dim(a, echo)?, Format::Json),
        Command::Lip(a) => (experiments::lip(a, echo)?, Format::Text),
        Command::Scaling(a) => (experiments::scaling(a, echo)?, Format::Json),
        Command::Covariance(a) => (experiments::covariance(a, echo)?, Format::Json),
        Command::Rewrite(a) => (experiments::rewrite(a, echo)?, Format::Text),
        Command::GasketCover(a) => (experiments::gasket_cover(a, echo)?, Format::Json),
    };
    let common = cli
        .command
        .common()
        .expect("experiments carry common options");
    let json = outcome.report.to_json();
    if let Some(path) = &common.output {
        std::fs::write(path, format!("{json}\n"))?;
    }
    match common.format.unwrap_or(default_format) {
        Format::Json => emit(&json),
        Format::Text => match &outcome.text {
            Some(text) => emit(text.trim_end()),
            None => emit(&outcome.report.summary()),
        },
    }
    if !outcome.report.passed() {
        eprintln!("{}", outcome.report.summary());
    }
    Ok(Some(outcome.report.passed()))
}

fn main() -> ExitCode {
    let args = match config::expand_args(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("nclab: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(Some(false)) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e @ (CliError::Config(_) | CliError::Library(_) | CliError::Io(_))) => {
            eprintln!("nclab: {e}");
            ExitCode::from(2)
        }
    }
}
