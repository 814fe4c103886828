use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("unknown experiment `{name}`; valid experiments: {valid}")]
    UnknownExperiment { name: String, valid: String },
    #[error("unknown key `{key}` for experiment `{experiment}`; accepted keys: {accepted}")]
    UnknownKey { key: String, experiment: String, accepted: String },
    #[error("missing required key `{key}` for experiment `{experiment}`")]
    MissingKey { key: String, experiment: String },
    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("{path}:{line}: {reason}")]
    Syntax { path: String, line: usize, reason: String },
    #[error(transparent)]
    Core(#[from] toral_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}:{line}: {reason}")]
    Format { path: String, line: usize, reason: String },
}

impl LabError {
    pub fn bad_value(key: &str, reason: impl Into<String>) -> Self {
        LabError::BadValue { key: key.into(), reason: reason.into() }
    }

    /// Process exit code: 2 for validation errors, 3 for budget exhaustion, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(e) if e.is_budget() => 3,
            LabError::Core(toral_core::Error::Invalid(_))
            | LabError::Core(toral_core::Error::OutOfDomain(..))
            | LabError::Core(toral_core::Error::OutsideCone { .. }) => 2,
            LabError::UnknownExperiment { .. }
            | LabError::UnknownKey { .. }
            | LabError::MissingKey { .. }
            | LabError::BadValue { .. }
            | LabError::Syntax { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
