use thiserror::Error;

/// Command failure with its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::Io(_) | CliError::Parse(_) => 4,
        }
    }
}

impl From<depthcert::Error> for CliError {
    fn from(e: depthcert::Error) -> Self {
        use depthcert::Error as E;
        match e {
            E::InvalidArgument(_) | E::Capacity { .. } | E::Degenerate(_) | E::Label { .. } => {
                CliError::Validation(vec![e.to_string()])
            }
            E::Diverged { .. } | E::HierarchyFailed { .. } => CliError::Diverged(e.to_string()),
            E::Parse { .. } | E::Checkpoint(_) => CliError::Parse(e.to_string()),
            E::Io(err) => CliError::Io(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
