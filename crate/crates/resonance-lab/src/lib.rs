//! Batch front-end for the resonance computations in `resonance-core`:
//! TOML-configured runs that emit versioned JSON/CSV artifacts plus a
//! manifest describing every file written.

use std::fmt;

pub mod commands;
pub mod config;
pub mod output;

/// Application error with a process exit code.
///
/// * `Config` — bad configuration or arguments (exit 2, nothing written),
/// * `Numerical` — a computation failed outright (exit 4),
/// * `Io` — a result could not be persisted or re-read (exit 4).
///
/// Partially resolved searches are not errors: the commands write what
/// they certified and return exit 3 themselves.
#[derive(Debug)]
pub enum AppError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl AppError {
    pub fn code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Numerical(_) | AppError::Io(_) => 4,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Config(m) => write!(f, "config error: {m}"),
            AppError::Numerical(m) => write!(f, "numerical failure: {m}"),
            AppError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for AppError {}
