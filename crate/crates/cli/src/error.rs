use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("grid `{0}` must be non-empty, finite and strictly increasing")]
    NonMonotoneGrid(&'static str),
    #[error("unknown parameter path `{0}`")]
    UnknownParameterPath(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("scenario {scenario}: {source}")]
    Compute { scenario: String, source: wgqed::Error },
}

impl CliError {
    /// 2 for bad input, 3 for failures during computation or output.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. }
            | CliError::Parse(_)
            | CliError::NonMonotoneGrid(_)
            | CliError::UnknownParameterPath(_)
            | CliError::InvalidScenario(_) => 2,
            CliError::Compute { source, .. } if source.is_validation() => 2,
            CliError::Compute { .. } | CliError::Write { .. } => 3,
        }
    }
}
