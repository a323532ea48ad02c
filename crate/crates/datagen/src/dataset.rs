//! Seeded sample generation and the on-disk dataset format.
//!
//! Data file: `CMPLDATA` container with a JSON header and `f32` payload laid out
//! sample-major; within a sample all inputs (process order) precede all outputs, each
//! field row-major.

use std::fs;
use std::path::Path;

use compol_core::checkpoint::{decode_container, encode_container, write_atomic};
use compol_tensor::{derive_seed, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DatagenError, Result};
use crate::grf::GrfSampler;
use crate::solver::{Etdrk4, Record};
use crate::spectral::subsample;
use crate::system::{SystemId, SystemSpec};

pub const DATASET_MAGIC: &[u8; 8] = b"CMPLDATA";
pub const DATASET_VERSION: u32 = 1;
pub const DATA_FILE: &str = "data.cmpl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Normalization statistics of one channel (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub name: String,
    pub input_mean: f64,
    pub input_std: f64,
    pub output_mean: f64,
    pub output_std: f64,
}

/// Input fields at `t = 0` and output fields at `t = T`, one channel per process.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDataset {
    pub spec: SystemSpec,
    pub seed: u64,
    /// Per process, `[samples, 1, grid...]`.
    pub inputs: Vec<Tensor<f32>>,
    pub outputs: Vec<Tensor<f32>>,
}

fn moments(values: &[f32]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = values
        .iter()
        .map(|&v| (v as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    (mean, var.sqrt())
}

impl FieldDataset {
    pub fn samples(&self) -> usize {
        self.inputs[0].shape()[0]
    }

    pub fn processes(&self) -> usize {
        self.inputs.len()
    }

    pub fn grid_shape(&self) -> Vec<usize> {
        self.inputs[0].shape()[2..].to_vec()
    }

    pub fn stats(&self) -> Vec<ChannelStats> {
        self.spec
            .channel_names()
            .iter()
            .enumerate()
            .map(|(m, name)| {
                let (input_mean, input_std) = moments(self.inputs[m].data());
                let (output_mean, output_std) = moments(self.outputs[m].data());
                ChannelStats {
                    name: name.to_string(),
                    input_mean,
                    input_std,
                    output_mean,
                    output_std,
                }
            })
            .collect()
    }

    /// The samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let samples = self.samples();
        if let Some(&bad) = indices.iter().find(|&&i| i >= samples) {
            return Err(DatagenError::Spec(format!(
                "sample {bad} out of range for {samples} samples"
            )));
        }
        let pick = |fields: &[Tensor<f32>]| -> Result<Vec<Tensor<f32>>> {
            fields
                .iter()
                .map(|t| {
                    let cells: usize = t.shape()[1..].iter().product();
                    let data = indices
                        .iter()
                        .flat_map(|&i| t.data()[i * cells..(i + 1) * cells].iter().copied())
                        .collect();
                    let mut shape = t.shape().to_vec();
                    shape[0] = indices.len();
                    Ok(Tensor::new(&shape, data)?)
                })
                .collect()
        };
        Ok(Self {
            spec: self.spec.clone(),
            seed: self.seed,
            inputs: pick(&self.inputs)?,
            outputs: pick(&self.outputs)?,
        })
    }
}

/// Initial fields on the sampler's grid.
pub fn initial_condition<R: Rng + ?Sized>(
    spec: &SystemSpec,
    sampler: &GrfSampler,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let ic = spec.initial;
    match spec.id() {
        SystemId::Lv => (0..2)
            .map(|_| {
                sampler
                    .sample(rng)
                    .into_iter()
                    .map(|g| (g + ic.shift).max(0.0))
                    .collect()
            })
            .collect(),
        SystemId::Gs => {
            let g: Vec<f64> = sampler
                .sample(rng)
                .into_iter()
                .map(|g| g.max(0.0))
                .collect();
            vec![
                g.iter().map(|p| 1.0 - ic.scale * p).collect(),
                g.iter().map(|p| ic.scale * p).collect(),
            ]
        }
        SystemId::Bz | SystemId::Burgers => {
            (0..spec.processes()).map(|_| sampler.sample(rng)).collect()
        }
    }
}

/// Per-sample random stream, independent of generation order.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("sample{index}")))
}

/// Generates `n` samples in parallel; output is identical for any thread count.
pub fn generate_samples(spec: &SystemSpec, n: usize, seed: u64) -> Result<FieldDataset> {
    spec.validate()?;
    let fine = spec.fine_grid()?;
    let coarse = spec.grid()?;
    let solver = Etdrk4::new(spec, fine.n)?;
    let sampler = GrfSampler::new(&spec.grf(fine.n))?;
    let to_coarse = |fields: &[Vec<f64>]| -> Result<Vec<Vec<f32>>> {
        fields
            .iter()
            .map(|f| {
                Ok(subsample(f, fine, coarse.n)?
                    .into_iter()
                    .map(|x| x as f32)
                    .collect())
            })
            .collect()
    };
    let pairs: Vec<(Vec<Vec<f32>>, Vec<Vec<f32>>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let run = || -> Result<_> {
                let u0 = initial_condition(spec, &sampler, &mut sample_rng(seed, i));
                let traj = solver.solve(&u0, Record::Final)?;
                Ok((to_coarse(&u0)?, to_coarse(traj.last())?))
            };
            run().map_err(|e| DatagenError::Sample {
                index: i,
                cause: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let mut shape = vec![n, 1];
    shape.extend(coarse.shape());
    let gather = |pick: fn(&(Vec<Vec<f32>>, Vec<Vec<f32>>)) -> &Vec<Vec<f32>>, m: usize| {
        let data: Vec<f32> = pairs
            .iter()
            .flat_map(|p| pick(p)[m].iter().copied())
            .collect();
        Tensor::new(&shape, data)
    };
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for m in 0..spec.processes() {
        inputs.push(gather(|p| &p.0, m)?);
        outputs.push(gather(|p| &p.1, m)?);
    }
    Ok(FieldDataset {
        spec: spec.clone(),
        seed,
        inputs,
        outputs,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    spec: SystemSpec,
    seed: u64,
    samples: usize,
    grid: Vec<usize>,
    channels: Vec<String>,
    /// Channel indices owned by each process.
    partition: Vec<Vec<usize>>,
    stats: Vec<ChannelStats>,
    dtype: String,
}

pub fn encode_dataset(ds: &FieldDataset) -> Result<Vec<u8>> {
    let header = Header {
        spec: ds.spec.clone(),
        seed: ds.seed,
        samples: ds.samples(),
        grid: ds.grid_shape(),
        channels: ds
            .spec
            .channel_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        partition: (0..ds.processes()).map(|m| vec![m]).collect(),
        stats: ds.stats(),
        dtype: "real32".into(),
    };
    let cells: usize = header.grid.iter().product();
    let mut payload = Vec::with_capacity(8 * ds.samples() * ds.processes() * cells);
    for n in 0..ds.samples() {
        for fields in [&ds.inputs, &ds.outputs] {
            for t in fields.iter() {
                for v in &t.data()[n * cells..(n + 1) * cells] {
                    payload.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    let header = serde_json::to_vec(&header)?;
    Ok(encode_container(
        DATASET_MAGIC,
        DATASET_VERSION,
        &header,
        &payload,
    ))
}

pub fn decode_dataset(bytes: &[u8]) -> Result<FieldDataset> {
    let (header, payload) = decode_container(bytes, DATASET_MAGIC, DATASET_VERSION)?;
    let h: Header = serde_json::from_slice(header)
        .map_err(|e| DatagenError::Corrupt(format!("unreadable header: {e}")))?;
    h.spec
        .validate()
        .map_err(|e| DatagenError::Corrupt(e.to_string()))?;
    let procs = h.spec.processes();
    if h.grid != h.spec.grid()?.shape() {
        return Err(DatagenError::Corrupt(format!(
            "grid {:?} does not match the system spec",
            h.grid
        )));
    }
    let cells: usize = h.grid.iter().product();
    let expected = 4 * h.samples * 2 * procs * cells;
    if payload.len() != expected {
        return Err(DatagenError::Corrupt(format!(
            "payload has {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    let mut shape = vec![h.samples, 1];
    shape.extend(&h.grid);
    let field = |slot: usize| -> Result<Tensor<f32>> {
        let data = (0..h.samples)
            .flat_map(|n| {
                let start = (n * 2 * procs + slot) * cells;
                values[start..start + cells].iter().copied()
            })
            .collect();
        Ok(Tensor::new(&shape, data)?)
    };
    Ok(FieldDataset {
        spec: h.spec.clone(),
        seed: h.seed,
        inputs: (0..procs).map(field).collect::<Result<_>>()?,
        outputs: (0..procs)
            .map(|m| field(procs + m))
            .collect::<Result<_>>()?,
    })
}

/// Summary written next to the data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub files: Vec<String>,
    pub system: SystemId,
    pub samples: usize,
    pub grid: Vec<usize>,
    pub channels: Vec<String>,
    pub seed: u64,
    pub spec: SystemSpec,
    pub stats: Vec<ChannelStats>,
    /// SHA-256 of the generation config (spec, sample count, seed).
    pub config_hash: String,
}

pub fn config_hash(spec: &SystemSpec, samples: usize, seed: u64) -> Result<String> {
    let bytes = serde_json::to_vec(&serde_json::json!({
        "spec": spec,
        "samples": samples,
        "seed": seed,
    }))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn manifest_for(ds: &FieldDataset) -> Result<DatasetManifest> {
    Ok(DatasetManifest {
        files: vec![DATA_FILE.to_string()],
        system: ds.spec.id(),
        samples: ds.samples(),
        grid: ds.grid_shape(),
        channels: ds
            .spec
            .channel_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        seed: ds.seed,
        spec: ds.spec.clone(),
        stats: ds.stats(),
        config_hash: config_hash(&ds.spec, ds.samples(), ds.seed)?,
    })
}

/// Writes the data file and manifest into `dir`, creating it if needed.
pub fn write_dataset(dir: &Path, ds: &FieldDataset) -> Result<DatasetManifest> {
    fs::create_dir_all(dir)?;
    let manifest = manifest_for(ds)?;
    write_atomic(&dir.join(DATA_FILE), &encode_dataset(ds)?)?;
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    write_atomic(&dir.join(MANIFEST_FILE), &text)?;
    Ok(manifest)
}

pub fn generate_dataset(
    spec: &SystemSpec,
    n_samples: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    let ds = generate_samples(spec, n_samples, seed)?;
    write_dataset(out_dir, &ds)
}

pub fn load_dataset(dir: &Path) -> Result<(DatasetManifest, FieldDataset)> {
    let manifest: DatasetManifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?)
        .map_err(|e| DatagenError::Corrupt(format!("unreadable manifest: {e}")))?;
    let file = manifest
        .files
        .first()
        .ok_or_else(|| DatagenError::Corrupt("manifest lists no data files".into()))?;
    let ds = decode_dataset(&fs::read(dir.join(file))?)?;
    if ds.samples() != manifest.samples
        || ds.spec != manifest.spec
        || ds.seed != manifest.seed
        || config_hash(&ds.spec, ds.samples(), ds.seed)? != manifest.config_hash
    {
        return Err(DatagenError::Corrupt(
            "data file does not match its manifest".into(),
        ));
    }
    Ok((manifest, ds))
}
