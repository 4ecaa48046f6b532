//! Experiment harness for the GPSP solver: instance manifests, single solves,
//! parameter sweeps with CSV output, and optimality certificates.

pub mod cli;
pub mod manifest;
pub mod record;
pub mod run;
pub mod svg;
pub mod sweep;

/// Failure classes mapped to process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or inconsistent inputs; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Anything that went wrong after the inputs were accepted; exit code 1.
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}
