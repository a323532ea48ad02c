use compol_core::CoreError;
use compol_tensor::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid system spec: {0}")]
    Spec(String),
    #[error("integration blew up at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },
    #[error("sample {index}: {cause}")]
    Sample {
        index: usize,
        cause: Box<DatagenError>,
    },
    #[error("corrupt dataset: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DatagenError>;
