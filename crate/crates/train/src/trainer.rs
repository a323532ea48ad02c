use std::time::Instant;

use compol_core::{CompolConfig, CompolModel};
use compol_datagen::FieldDataset;
use compol_tensor::{derive_seed, Real, Tape, Tensor, Var};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, TrainError};
use crate::metrics::{mean_std, relative_l2};
use crate::normalize::Normalizer;
use crate::optim::{AdamConfig, AdamState, Schedule};

/// Samples per forward pass during evaluation; fixed so results do not depend on threads.
const EVAL_CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub schedule: Schedule,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch: 32,
            lr: 1e-3,
            schedule: Schedule::Cosine,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    /// Mean relative L2 error per process on the test split.
    pub test_error: Vec<f64>,
    pub test_aggregate: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub config_hash: String,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Serialize, Deserialize)]
struct Line {
    #[serde(flatten)]
    epoch: EpochRecord,
    seed: u64,
    config_hash: String,
}

impl RunRecord {
    /// One JSON object per epoch.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.epochs {
            out.push_str(&serde_json::to_string(&Line {
                epoch: e.clone(),
                seed: self.seed,
                config_hash: self.config_hash.clone(),
            })?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut record = Self {
            seed: 0,
            config_hash: String::new(),
            epochs: Vec::new(),
        };
        for (i, raw) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let line: Line = serde_json::from_str(raw)?;
            if i > 0 && (line.seed != record.seed || line.config_hash != record.config_hash) {
                return Err(TrainError::Config(format!(
                    "line {} belongs to a different run",
                    i + 1
                )));
            }
            record.seed = line.seed;
            record.config_hash = line.config_hash;
            record.epochs.push(line.epoch);
        }
        Ok(record)
    }

    /// The record with wall-clock fields zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        for e in &mut out.epochs {
            e.wall_ms = 0;
        }
        out
    }

    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs
            .iter()
            .fold(None, |best: Option<&EpochRecord>, e| match best {
                Some(b) if !(e.test_aggregate < b.test_aggregate) => Some(b),
                _ => Some(e),
            })
    }
}

pub struct TrainOutcome<T: Real> {
    pub record: RunRecord,
    /// Parameters after the epoch with the lowest test error (the initialization if no epochs ran).
    pub best: CompolModel<T>,
    /// 0 when no epochs ran.
    pub best_epoch: usize,
    pub normalizer: Normalizer,
}

/// SHA-256 of the model and training configs.
pub fn run_hash(model: &CompolConfig, train: &TrainConfig) -> Result<String> {
    let bytes = serde_json::to_vec(&serde_json::json!({ "model": model, "train": train }))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Standardized inputs and raw targets, flattened per process.
struct Prepared<T: Real> {
    samples: usize,
    cells: usize,
    field: Vec<usize>,
    inputs: Vec<Vec<T>>,
    targets: Vec<Vec<T>>,
    /// `1 / ||y||` per process and sample, or 1 for zero-norm targets.
    inv_norm: Vec<Vec<T>>,
}

struct Batch<T: Real> {
    inputs: Vec<Tensor<T>>,
    targets: Vec<Tensor<T>>,
    inv_norm: Vec<Tensor<T>>,
}

fn check_compatible(cfg: &CompolConfig, ds: &FieldDataset, norm: &Normalizer) -> Result<()> {
    if ds.processes() != cfg.processes() || cfg.channels.iter().any(|&c| c != 1) {
        return Err(TrainError::Config(format!(
            "model channels {:?} do not match a dataset of {} single-channel processes",
            cfg.channels,
            ds.processes()
        )));
    }
    if norm.processes() != ds.processes() || norm.outputs.len() != ds.processes() {
        return Err(TrainError::Config(format!(
            "normalizer covers {} processes, dataset has {}",
            norm.processes(),
            ds.processes()
        )));
    }
    cfg.check_grid(&ds.grid_shape())?;
    Ok(())
}

impl<T: Real> Prepared<T> {
    fn new(ds: &FieldDataset, norm: &Normalizer) -> Self {
        let samples = ds.samples();
        let mut field = vec![1];
        field.extend(ds.grid_shape());
        let cells: usize = field.iter().product();
        let inputs = ds
            .inputs
            .iter()
            .zip(&norm.inputs)
            .map(|(t, a)| {
                t.data()
                    .iter()
                    .map(|&x| T::of(a.forward(x as f64)))
                    .collect()
            })
            .collect();
        let targets = ds
            .outputs
            .iter()
            .map(|t| t.data().iter().map(|&x| T::of(x as f64)).collect())
            .collect();
        let inv_norm = ds
            .outputs
            .iter()
            .map(|t| {
                t.data()
                    .chunks_exact(cells)
                    .map(|row| {
                        let n = row.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
                        if n == 0.0 {
                            T::one()
                        } else {
                            T::of(1.0 / n)
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            samples,
            cells,
            field,
            inputs,
            targets,
            inv_norm,
        }
    }

    fn batch(&self, idx: &[usize]) -> Result<Batch<T>> {
        let mut shape = vec![idx.len()];
        shape.extend(&self.field);
        let rows = |src: &[T]| -> Vec<T> {
            idx.iter()
                .flat_map(|&i| src[i * self.cells..(i + 1) * self.cells].iter().copied())
                .collect()
        };
        let mut out = Batch {
            inputs: Vec::new(),
            targets: Vec::new(),
            inv_norm: Vec::new(),
        };
        for m in 0..self.inputs.len() {
            out.inputs.push(Tensor::new(&shape, rows(&self.inputs[m]))?);
            out.targets
                .push(Tensor::new(&shape, rows(&self.targets[m]))?);
            out.inv_norm.push(Tensor::new(
                &[idx.len()],
                idx.iter().map(|&i| self.inv_norm[m][i]).collect(),
            )?);
        }
        Ok(out)
    }
}

/// Mean over processes of the batch-mean relative L2 error of de-standardized predictions.
fn batch_loss<'t, T: Real>(
    tape: &'t Tape<T>,
    preds: &[Var<'t, T>],
    batch: &Batch<T>,
    norm: &Normalizer,
) -> Result<Var<'t, T>> {
    let mut total: Option<Var<'t, T>> = None;
    for (m, pred) in preds.iter().enumerate() {
        let out = norm.outputs[m];
        let raw = pred
            .scale(T::of(out.std))
            .add(&tape.constant(Tensor::scalar(T::of(out.mean))))?;
        let diff = raw.sub(&tape.constant(batch.targets[m].clone()))?;
        let axes: Vec<usize> = (1..diff.shape().len()).collect();
        let err = diff
            .mul(&diff)?
            .sum(&axes)?
            .sqrt()?
            .mul(&tape.constant(batch.inv_norm[m].clone()))?
            .mean_all()?;
        total = Some(match total {
            Some(t) => t.add(&err)?,
            None => err,
        });
    }
    let total = total.ok_or_else(|| TrainError::Config("model has no processes".into()))?;
    Ok(total.scale(T::of(1.0 / preds.len() as f64)))
}

fn forward_loss<'t, T: Real>(
    model: &CompolModel<T>,
    tape: &'t Tape<T>,
    trainable: bool,
    batch: &Batch<T>,
    norm: &Normalizer,
) -> Result<(Var<'t, T>, compol_core::Bound<'t, T>)> {
    let params = model.bind(tape, trainable);
    let xs: Vec<Var<'t, T>> = batch
        .inputs
        .iter()
        .map(|x| tape.constant(x.clone()))
        .collect();
    let preds = model.forward(tape, &params, &xs)?;
    Ok((batch_loss(tape, &preds, batch, norm)?, params))
}

/// The training loss evaluated over all of `ds` (no parameter updates).
pub fn dataset_loss<T: Real>(
    model: &CompolModel<T>,
    norm: &Normalizer,
    ds: &FieldDataset,
) -> Result<f64> {
    check_compatible(model.config(), ds, norm)?;
    let data = Prepared::<T>::new(ds, norm);
    if data.samples == 0 {
        return Ok(f64::NAN);
    }
    let idx: Vec<usize> = (0..data.samples).collect();
    let mut sum = 0.0;
    for chunk in idx.chunks(EVAL_CHUNK) {
        let tape = Tape::new();
        let (loss, _) = forward_loss(model, &tape, false, &data.batch(chunk)?, norm)?;
        sum += loss.value().item()?.as_f64() * chunk.len() as f64;
    }
    Ok(sum / data.samples as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// `[process][sample]` relative L2 errors.
    pub per_sample: Vec<Vec<f64>>,
    pub per_process: Vec<f64>,
    /// Mean over processes.
    pub aggregate: f64,
    /// Some target had zero norm and was scored by absolute error.
    pub zero_norm: bool,
}

/// De-standardized predictions `[process][sample * cells]` in sample order.
fn predictions<T: Real>(
    model: &CompolModel<T>,
    norm: &Normalizer,
    data: &Prepared<T>,
) -> Result<Vec<Vec<f64>>> {
    let idx: Vec<usize> = (0..data.samples).collect();
    let chunks = idx
        .par_chunks(EVAL_CHUNK)
        .map(|chunk| -> Result<Vec<Vec<f64>>> {
            let batch = data.batch(chunk)?;
            let preds = model.predict(&batch.inputs)?;
            Ok(preds
                .iter()
                .zip(&norm.outputs)
                .map(|(p, a)| p.data().iter().map(|&z| a.inverse(z.as_f64())).collect())
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Vec::with_capacity(data.samples * data.cells); model.config().processes()];
    for chunk in chunks {
        for (dst, src) in out.iter_mut().zip(chunk) {
            dst.extend(src);
        }
    }
    Ok(out)
}

/// Relative L2 errors on `ds`; deterministic for any thread count.
pub fn evaluate<T: Real>(
    model: &CompolModel<T>,
    norm: &Normalizer,
    ds: &FieldDataset,
) -> Result<Evaluation> {
    check_compatible(model.config(), ds, norm)?;
    if ds.samples() == 0 {
        return Err(TrainError::Config(
            "cannot evaluate an empty dataset".into(),
        ));
    }
    let data = Prepared::<T>::new(ds, norm);
    let preds = predictions(model, norm, &data)?;
    let mut eval = Evaluation {
        per_sample: Vec::new(),
        per_process: Vec::new(),
        aggregate: 0.0,
        zero_norm: false,
    };
    for (pred, truth) in preds.iter().zip(&ds.outputs) {
        let truth: Vec<f64> = truth.data().iter().map(|&x| x as f64).collect();
        let err = relative_l2(pred, &truth, data.samples)?;
        eval.zero_norm |= err.zero_norm;
        eval.per_process.push(err.mean());
        eval.per_sample.push(err.per_sample);
    }
    eval.aggregate = mean_std(&eval.per_process).0;
    Ok(eval)
}

/// `ds` with each output replaced by `|prediction - truth|`.
pub fn error_fields<T: Real>(
    model: &CompolModel<T>,
    norm: &Normalizer,
    ds: &FieldDataset,
) -> Result<FieldDataset> {
    check_compatible(model.config(), ds, norm)?;
    let data = Prepared::<T>::new(ds, norm);
    let preds = predictions(model, norm, &data)?;
    let outputs = preds
        .iter()
        .zip(&ds.outputs)
        .map(|(p, t)| {
            let abs = p
                .iter()
                .zip(t.data())
                .map(|(&a, &b)| (a - b as f64).abs() as f32)
                .collect();
            Tensor::new(t.shape(), abs)
        })
        .collect::<std::result::Result<_, _>>()?;
    Ok(FieldDataset {
        spec: ds.spec.clone(),
        seed: ds.seed,
        inputs: ds.inputs.clone(),
        outputs,
    })
}

/// Trains a freshly initialized model with Adam, standardizing with statistics of
/// `train_set`, and keeps the parameters of the epoch with the lowest test error.
pub fn train<T: Real>(
    model_cfg: &CompolConfig,
    cfg: &TrainConfig,
    train_set: &FieldDataset,
    test_set: &FieldDataset,
) -> Result<TrainOutcome<T>> {
    if cfg.batch == 0 {
        return Err(TrainError::Config("batch size must be positive".into()));
    }
    if !(cfg.lr >= 0.0) || !cfg.lr.is_finite() {
        return Err(TrainError::Config(format!(
            "learning rate {} is not a finite nonnegative number",
            cfg.lr
        )));
    }
    if cfg.epochs > 0 && (train_set.samples() == 0 || test_set.samples() == 0) {
        return Err(TrainError::Config(format!(
            "training needs samples in both splits, got {} train and {} test",
            train_set.samples(),
            test_set.samples()
        )));
    }
    if train_set.spec != test_set.spec {
        return Err(TrainError::Config(
            "train and test splits come from different systems".into(),
        ));
    }
    let normalizer = Normalizer::fit(train_set);
    let mut model = CompolModel::<T>::new(model_cfg.clone())?;
    check_compatible(model_cfg, train_set, &normalizer)?;
    let mut record = RunRecord {
        seed: cfg.seed,
        config_hash: run_hash(model_cfg, cfg)?,
        epochs: Vec::new(),
    };
    let mut best = model.clone();
    let mut best_epoch = 0;
    let data = Prepared::<T>::new(train_set, &normalizer);
    let mut adam = AdamState::new(cfg.adam);
    let mut order: Vec<usize> = (0..data.samples).collect();
    for e in 0..cfg.epochs {
        let start = Instant::now();
        let lr = cfg.schedule.lr(e, cfg.epochs, cfg.lr);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("epoch{e}")));
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, idx) in order.chunks(cfg.batch).enumerate() {
            let batch = data.batch(idx)?;
            let tape = Tape::new();
            let (loss, params) = forward_loss(&model, &tape, true, &batch, &normalizer)?;
            let value = loss.value().item()?.as_f64();
            if !value.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch: e + 1,
                    batch: b + 1,
                });
            }
            loss_sum += value * idx.len() as f64;
            let grads = tape.backward(&loss)?;
            let grads = params.gradients(model.params(), &grads)?;
            adam.step(model.params_mut(), &grads, lr)?;
        }
        let eval = evaluate(&model, &normalizer, test_set)?;
        if best_epoch == 0 || eval.aggregate < record.epochs[best_epoch - 1].test_aggregate {
            best = model.clone();
            best_epoch = e + 1;
        }
        record.epochs.push(EpochRecord {
            epoch: e + 1,
            lr,
            train_loss: loss_sum / data.samples as f64,
            test_error: eval.per_process,
            test_aggregate: eval.aggregate,
            wall_ms: start.elapsed().as_millis() as u64,
        });
    }
    Ok(TrainOutcome {
        record,
        best,
        best_epoch,
        normalizer,
    })
}
