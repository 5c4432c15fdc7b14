use phfem::ErrorCategory;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },

    #[error("structure check failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Core(#[from] phfem::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output { .. } => 2,
            CliError::Mesh(_) => 3,
            CliError::CheckFailed(_) => 4,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Config => 2,
                ErrorCategory::Mesh => 3,
                ErrorCategory::Assembly => 4,
                ErrorCategory::Solver => 5,
            },
        }
    }

    pub fn output(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
