mod args;
mod commands;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(taskaug_core::Error),
    Io(PathBuf, io::Error),
}

impl From<taskaug_core::Error> for CliError {
    fn from(e: taskaug_core::Error) -> Self {
        CliError::Data(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(e) => write!(f, "error: {e}"),
            CliError::Io(path, e) => write!(f, "error: {}: {e}", path.display()),
        }
    }
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    match cli.command {
        Command::Prepare(a) => commands::prepare(a),
        Command::LearnBpe(a) => commands::learn(a),
        Command::ApplyBpe(a) => commands::apply(a),
        Command::AlignIntersect(a) => commands::align_intersect(a),
        Command::Lexicon(a) => commands::lexicon(a),
        Command::Augment(a) => commands::augment(a),
        Command::CombineBt(a) => commands::combine(a),
        Command::AnalyzeSource(a) => commands::analyze_source(a),
        Command::AnalyzeKde(a) => commands::analyze_kde(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    // The augment stream owns stdout when no --out is given.
    let summary_to_stderr = matches!(&cli.command, Command::Augment(a) if a.out.is_none());
    match run(cli) {
        Ok(summary) => {
            if summary_to_stderr {
                eprintln!("{summary}");
            } else {
                println!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Usage(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
