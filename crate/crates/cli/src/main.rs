//! `textshield` command line front end.
//!
//! Exit codes: 0 success, 1 usage or output error, 2 missing or invalid
//! input, 3 inconsistent data (ids that do not line up).

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use args::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Consistency(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Output(_) => 1,
            Self::Input(_) => 2,
            Self::Consistency(_) => 3,
        }
    }
}

impl From<textshield_core::io::LoadError> for CliError {
    fn from(e: textshield_core::io::LoadError) -> Self {
        Self::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TEXTSHIELD_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Parse(a) => commands::parse(a),
        Command::Reward(a) => commands::reward(a),
        Command::Rectify(a) => commands::rectify(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Mask(m) => commands::mask(m),
        Command::Metrics(a) => commands::metrics(a),
        Command::Fixtures(f) => commands::fixtures(f),
    })
}
