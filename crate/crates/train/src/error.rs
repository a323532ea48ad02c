use compol_core::CoreError;
use compol_datagen::DatagenError;
use compol_tensor::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Data(#[from] DatagenError),
    #[error("{0}")]
    Config(String),
    #[error("gradient of `{param}` is not finite")]
    NonFiniteGradient { param: String },
    #[error("loss is not finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TrainError>;
