use std::path::PathBuf;

use thiserror::Error;

/// CLI failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("simulation failed: {0}")]
    Simulation(#[from] holomem::Error),
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{failed} of {total} sweep points failed")]
    SweepPoints { failed: usize, total: usize },
}

impl CliError {
    pub fn config(e: holomem::Error) -> Self {
        CliError::Config(e.to_string())
    }

    /// 2 for bad or missing inputs, 3 for failures while computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MissingInput(_) => 2,
            CliError::Simulation(_) | CliError::Io { .. } | CliError::SweepPoints { .. } => 3,
        }
    }
}
