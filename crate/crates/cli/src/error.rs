use thiserror::Error;

/// Exit codes: 0 pass, 1 semantic fail, 2 input error, 3 unsupported configuration.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<CliError> },

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) | Self::Io { .. } => 2,
            Self::Unsupported(_) => 3,
            Self::Stage { source, .. } => source.exit_code(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Self::Stage { stage, source: Box::new(self) }
    }
}

impl From<smrt::Error> for CliError {
    fn from(e: smrt::Error) -> Self {
        match e {
            smrt::Error::UnsupportedDimension(_) => Self::Unsupported(e.to_string()),
            other => Self::Input(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
