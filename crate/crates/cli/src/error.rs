use compol_core::CoreError;
use compol_datagen::DatagenError;
use compol_tensor::TensorError;
use compol_train::TrainError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, schema violations and mismatched inputs.
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// Verification or numerical failure.
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Data(DatagenError),
    #[error(transparent)]
    Train(TrainError),
    #[error(transparent)]
    Core(CoreError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 1 for numerical or verification failures, 2 for usage and I/O errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Failed(_) => 1,
            Self::Data(e) => datagen_code(e),
            Self::Train(e) => match e {
                TrainError::NonFiniteGradient { .. } | TrainError::NonFiniteLoss { .. } => 1,
                TrainError::Data(d) => datagen_code(d),
                _ => 2,
            },
            _ => 2,
        }
    }
}

fn datagen_code(e: &DatagenError) -> u8 {
    match e {
        DatagenError::BlowUp { .. } | DatagenError::Sample { .. } => 1,
        _ => 2,
    }
}

impl From<DatagenError> for CliError {
    fn from(e: DatagenError) -> Self {
        Self::Data(e)
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        Self::Train(e)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        Self::Core(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
