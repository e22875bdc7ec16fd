//! Experiment driver library behind the `dnl` binary. Every subcommand is
//! a plain function over a [`RunContext`], so the acceptance suite can
//! invoke commands in-process and inspect their outputs.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod manifest;
pub mod ratefit;
pub mod svg;

use std::path::PathBuf;

use config::Config;

/// Everything a command needs: the effective config, the output
/// directory, the global seed, and whether to emit plots.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub config: Config,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub plot: bool,
}

impl RunContext {
    pub fn new(config: Config, out_dir: impl Into<PathBuf>, seed: u64, plot: bool) -> Self {
        RunContext {
            config,
            out_dir: out_dir.into(),
            seed,
            plot,
        }
    }

    /// Deterministic per-purpose stream seed derived from the global seed.
    pub fn subseed(&self, purpose: &str) -> u64 {
        // FNV-1a over the purpose tag, folded with the global seed.
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in purpose.as_bytes() {
            hash ^= *byte as u64;
            hash = hash.wrapping_mul(0x100_0000_01b3);
        }
        hash ^ self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
    }
}

/// Command failure classes, mapped one-to-one onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration (exit 2).
    Usage(String),
    /// A property or acceptance threshold failed (exit 1).
    CheckFailed(String),
    /// Numerical failure: overflow, stall, divergence, untrusted oracle
    /// (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::CheckFailed(_) => 1,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::CheckFailed(m) | CliError::Numerical(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<dnl_core::Error> for CliError {
    fn from(err: dnl_core::Error) -> Self {
        match &err {
            dnl_core::Error::InvalidInput(_) | dnl_core::Error::DimensionMismatch(_) => {
                CliError::Usage(err.to_string())
            }
            _ => CliError::Numerical(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Usage(format!("i/o: {err}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
