mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};

/// A command failure, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration (exit 1).
    Usage(String),
    /// Unreadable or malformed input files (exit 2).
    Data(String),
    /// Non-finite loss or a failed gradient check (exit 3).
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<ltmn::Error> for Failure {
    fn from(e: ltmn::Error) -> Self {
        match e {
            ltmn::Error::NonFiniteLoss { .. } => Failure::Numeric(e.to_string()),
            ltmn::Error::Contract(m) => Failure::Usage(m),
            other => Failure::Data(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let sub = matches
        .subcommand()
        .map(|(_, m)| m.clone())
        .expect("a subcommand is required");

    let result = match cli.command {
        Command::GenerateMultiword(a) => commands::generate_multiword(&a),
        Command::Train(a) => commands::train(&a, &sub),
        Command::Eval(a) => commands::eval(&a),
        Command::Answer(a) => commands::answer(&a),
        Command::Gradcheck(a) => commands::gradcheck(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
