//! Library half of the `cqm` command-line tool: config file handling, fringe
//! fitting, table/sidecar output, and the command implementations. The
//! binary in `main.rs` is a thin argument-parsing wrapper so every piece is
//! testable in-process.

pub mod cli;
pub mod config;
pub mod fit;
pub mod output;

use std::fmt;

/// CLI failure classified by exit code: 2 for configuration problems, 3 for
/// drive-schedule problems, 4 for I/O.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Schedule(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Schedule(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration: {msg}"),
            CliError::Schedule(msg) => write!(f, "schedule: {msg}"),
            CliError::Io(msg) => write!(f, "i/o: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cqm::Error> for CliError {
    fn from(e: cqm::Error) -> Self {
        match e {
            cqm::Error::InvalidSchedule(_) | cqm::Error::InfeasibleSchedule { .. } => {
                CliError::Schedule(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
