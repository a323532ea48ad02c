use compol_datagen::FieldDataset;
use serde::{Deserialize, Serialize};

/// `x -> (x - mean) / std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub mean: f64,
    pub std: f64,
}

impl Affine {
    pub fn forward(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Per-channel standardization of inputs and outputs, one channel per process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalizer {
    pub inputs: Vec<Affine>,
    pub outputs: Vec<Affine>,
}

impl Normalizer {
    /// Statistics of `ds`; constant channels get unit scale.
    pub fn fit(ds: &FieldDataset) -> Self {
        let affine = |mean: f64, std: f64| Affine {
            mean,
            std: if std > 0.0 { std } else { 1.0 },
        };
        let stats = ds.stats();
        Self {
            inputs: stats
                .iter()
                .map(|s| affine(s.input_mean, s.input_std))
                .collect(),
            outputs: stats
                .iter()
                .map(|s| affine(s.output_mean, s.output_std))
                .collect(),
        }
    }

    pub fn identity(processes: usize) -> Self {
        let unit = Affine {
            mean: 0.0,
            std: 1.0,
        };
        Self {
            inputs: vec![unit; processes],
            outputs: vec![unit; processes],
        }
    }

    pub fn processes(&self) -> usize {
        self.inputs.len()
    }
}
