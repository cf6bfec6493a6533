mod args;
mod commands;
mod output;

use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;

use args::Cli;
use output::RecordedConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qusum_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "Io",
            CliError::Input(_) => "InvalidInput",
            CliError::Usage(_) => "UnknownSubcommand",
        }
    }

    /// 1 for bad input, 2 for a numerical procedure failing on valid input.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_validation() => 2,
            _ => 1,
        }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    exit_code: u8,
}

fn fail(err: &CliError) -> ExitCode {
    let code = err.exit_code();
    let report = ErrorReport {
        error: err.kind(),
        message: err.to_string(),
        exit_code: code,
    };
    eprintln!(
        "{}",
        serde_json::to_string(&report).expect("error report serializes")
    );
    ExitCode::from(code)
}

fn execute(cli: Cli) -> Result<commands::Done, CliError> {
    let command = match (cli.replay, cli.command) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--replay replaces the subcommand; give one or the other".into(),
            ))
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            RecordedConfig::from_json(&text)?.command
        }
        (None, Some(c)) => c,
        (None, None) => return Err(CliError::Usage("no subcommand given".into())),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?
            .install(|| commands::run(command)),
        None => commands::run(command),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                ErrorKind::InvalidSubcommand | ErrorKind::MissingSubcommand => {
                    fail(&CliError::Usage(e.kind().to_string()))
                }
                _ => {
                    let err = CliError::Input(e.kind().to_string());
                    ExitCode::from(err.exit_code())
                }
            };
        }
    };
    let quiet = cli.quiet;
    match execute(cli) {
        Ok(done) => {
            if !quiet {
                eprintln!("{}", done.summary);
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
