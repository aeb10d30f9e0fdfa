//! `mbsts` command-line tool.
//!
//! ```text
//! mbsts prepare --synthetic --M 3 --d 7 --T 60 --true-lag 1 --seed 7 --out panel.csv
//! mbsts prepare --sources jhu,oxcgrt --indices indices.csv --population pop.csv --out panel.csv
//! mbsts tune --panel panel.csv --segments 9:22,23:37,38:53 --lags 0,1,2 --seed 1 --out-dir tune
//! mbsts fit --panel panel.csv --from-tune tune --dominant --out-dir fit
//! ```
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for runtime
//! failures; failures print one line `error: <kind>: <message>` to stderr.

mod args;
mod config;
mod fit;
mod prepare;
mod tune;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure of a subcommand, split by exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(mbsts::Error),
}

impl From<mbsts::Error> for CliError {
    fn from(e: mbsts::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: usage: {}", one_line(first));
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Prepare(a) => prepare::run(a),
        Command::Tune(a) => tune::run(a),
        Command::Fit(a) => fit::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: usage: {}", one_line(&msg));
            ExitCode::from(1)
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {}: {}", e.kind(), one_line(&e.to_string()));
            ExitCode::from(2)
        }
    }
}
