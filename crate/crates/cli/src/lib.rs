//! The `dysalign` command line: simulate, align, detect, eval and gesture fit.
//!
//! Exit codes: 0 success, 2 usage, 3 bad input data, 4 internal failure.
//! Failures also print one JSON error object to stderr.

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub mod args;
mod commands;
mod output;

use args::{Cli, Command, GestureCommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    fn json_line(&self) -> String {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Data(m) => ("data", m),
            CliError::Internal(m) => ("internal", m),
        };
        serde_json::json!({ "error": kind, "message": message }).to_string()
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("DYSALIGN_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let seed = match cli.seed {
        Some(s) => s,
        None => {
            let s: u64 = rand::random();
            eprintln!("{}", serde_json::json!({ "generated_seed": s }));
            s
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Simulate(a) => commands::simulate(a, seed),
        Command::Align(a) => commands::align(a, seed),
        Command::Detect(a) => commands::detect(a, seed),
        Command::Eval(a) => commands::eval(a, seed),
        Command::Gesture(GestureCommand::Fit(a)) => commands::gesture_fit(a, seed),
    })
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => {
                    eprintln!("{}", CliError::Usage(e.kind().to_string()).json_line());
                    2
                }
            };
        }
    };
    if cli.jobs == Some(0) {
        let e = CliError::Usage("--jobs must be at least 1".into());
        eprintln!("{}", e.json_line());
        return e.exit_code();
    }
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("{}", e.json_line());
            e.exit_code()
        }
    }
}
