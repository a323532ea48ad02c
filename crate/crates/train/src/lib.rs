//! Supervised training of coupled operator models on generated field datasets.

pub mod cv;
mod error;
pub mod metrics;
pub mod normalize;
pub mod optim;
pub mod trainer;

pub use cv::{cross_validate, fold_indices, CvSummary, FoldResult};
pub use error::{Result, TrainError};
pub use metrics::{mean_std, relative_l2, RelativeL2};
pub use normalize::{Affine, Normalizer};
pub use optim::{cosine_lr, AdamConfig, AdamState, Schedule};
pub use trainer::{
    dataset_loss, error_fields, evaluate, run_hash, train, EpochRecord, Evaluation, RunRecord,
    TrainConfig, TrainOutcome,
};
