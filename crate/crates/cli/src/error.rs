use misspec_learn::components::ComponentError;
use misspec_learn::dynamics::DynamicsError;
use misspec_learn::io::IoError;
use misspec_learn::model::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Assertion(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("unknown example `{0}`; run `reproduce --list` for the available ids")]
    UnknownExample(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Assertion(_) => 1,
            Self::Config(_) | Self::UnknownExample(_) | Self::Write { .. } => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<ComponentError> for CliError {
    fn from(e: ComponentError) -> Self {
        match e {
            ComponentError::TooLarge { .. } | ComponentError::InvalidFace(_) => Self::Config(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::StepTooLarge { .. } | DynamicsError::Update { .. } => Self::Numerical(e.to_string()),
            DynamicsError::Components(c) => c.into(),
            _ => Self::Config(e.to_string()),
        }
    }
}
