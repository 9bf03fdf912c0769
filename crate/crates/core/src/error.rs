use std::path::PathBuf;
use thiserror::Error;

/// Errors surfaced by configuration, checkpoint and enumeration paths.
///
/// Misuse of pure numeric operations (shape mismatches, out-of-range
/// indices) panics instead; those are programming errors, not runtime
/// conditions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Config {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: PathBuf, msg: String },
    #[error(
        "checkpoint fingerprint {found:#018x} does not match scenario fingerprint {expected:#018x}"
    )]
    FingerprintMismatch { expected: u64, found: u64 },
    #[error("enumeration would visit {count} terminal states, above the cap of {cap}")]
    EnumerationCap { count: u128, cap: u64 },
    #[error("validation failed: {0}")]
    CheckFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable process exit code for the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::FingerprintMismatch { .. } => 2,
            Error::CheckFailed(_) => 3,
            _ => 1,
        }
    }
}
