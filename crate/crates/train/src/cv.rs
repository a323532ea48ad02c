use compol_core::CompolConfig;
use compol_datagen::FieldDataset;
use compol_tensor::Real;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TrainError};
use crate::metrics::mean_std;
use crate::trainer::{evaluate, train, TrainConfig};

/// Held-out indices per fold: sample `i` belongs to fold `i % folds`.
pub fn fold_indices(samples: usize, folds: usize) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > samples {
        return Err(TrainError::Config(format!(
            "cannot split {samples} samples into {folds} folds"
        )));
    }
    Ok((0..folds)
        .map(|f| (f..samples).step_by(folds).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub test: Vec<usize>,
    pub best_epoch: usize,
    /// Aggregate relative L2 error of the best checkpoint on the held-out fold.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub folds: Vec<FoldResult>,
    pub mean: f64,
    /// Population standard deviation over folds.
    pub std: f64,
}

impl CvSummary {
    pub fn from_folds(folds: Vec<FoldResult>) -> Self {
        let errors: Vec<f64> = folds.iter().map(|f| f.error).collect();
        let (mean, std) = mean_std(&errors);
        Self { folds, mean, std }
    }
}

/// K-fold cross-validation, training a fresh model per fold.
pub fn cross_validate<T: Real>(
    model_cfg: &CompolConfig,
    cfg: &TrainConfig,
    ds: &FieldDataset,
    folds: usize,
) -> Result<CvSummary> {
    let splits = fold_indices(ds.samples(), folds)?;
    let mut results = Vec::with_capacity(folds);
    for test in splits {
        let rest: Vec<usize> = (0..ds.samples()).filter(|i| i % folds != test[0]).collect();
        let (train_set, test_set) = (ds.select(&rest)?, ds.select(&test)?);
        let outcome = train::<T>(model_cfg, cfg, &train_set, &test_set)?;
        let error = evaluate(&outcome.best, &outcome.normalizer, &test_set)?.aggregate;
        results.push(FoldResult {
            test,
            best_epoch: outcome.best_epoch,
            error,
        });
    }
    Ok(CvSummary::from_folds(results))
}
