//! Experiment driver behind the `spectral-sparse` binary.

use std::fmt;

pub mod config;
pub mod experiments;
pub mod output;
pub mod runner;

/// Bad user input: a missing or malformed file, or an invalid config.
///
/// The binary maps this to exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError(String);

impl InputError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// Exit code for an error chain.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.is::<InputError>()) {
        2
    } else {
        1
    }
}
