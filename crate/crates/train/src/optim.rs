use compol_core::ParamStore;
use compol_tensor::{Real, Tensor};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TrainError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments, kept in `f64` per scalar (complex parameters as real/imaginary pairs).
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    moments: IndexMap<String, (Vec<f64>, Vec<f64>)>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            moments: IndexMap::new(),
        }
    }

    /// First and second moment of `name`, once it has been updated.
    pub fn moments(&self, name: &str) -> Option<(&[f64], &[f64])> {
        self.moments
            .get(name)
            .map(|(m, v)| (m.as_slice(), v.as_slice()))
    }

    /// One bias-corrected update of every parameter in `store`.
    ///
    /// Gradients are checked for finiteness before anything is modified.
    pub fn step<T: Real>(
        &mut self,
        store: &mut ParamStore<T>,
        grads: &IndexMap<String, Tensor<T>>,
        lr: f64,
    ) -> Result<()> {
        for (name, param) in store.iter() {
            let g = grads
                .get(name)
                .ok_or_else(|| TrainError::Config(format!("no gradient for parameter `{name}`")))?;
            if g.shape() != param.shape() || g.is_complex() != param.is_complex() {
                return Err(TrainError::Config(format!(
                    "gradient of `{name}` has shape {:?}, parameter has {:?}",
                    g.shape(),
                    param.shape()
                )));
            }
            if !g.all_finite() {
                return Err(TrainError::NonFiniteGradient {
                    param: name.to_string(),
                });
            }
        }
        self.step += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let names: Vec<String> = store.names().map(str::to_string).collect();
        for name in names {
            let param = store.get(&name)?;
            let g = &grads[&name];
            let len = param.data().len();
            let (m, v) = self
                .moments
                .entry(name.clone())
                .or_insert_with(|| (vec![0.0; len], vec![0.0; len]));
            let data: Vec<T> = param
                .data()
                .iter()
                .zip(g.data())
                .zip(m.iter_mut().zip(v.iter_mut()))
                .map(|((&p, &g), (m, v))| {
                    let g = g.as_f64();
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let update = lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                    T::of(p.as_f64() - update)
                })
                .collect();
            let updated = if param.is_complex() {
                Tensor::new_complex(param.shape(), data)?
            } else {
                Tensor::new(param.shape(), data)?
            };
            store.set(&name, updated)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Cosine,
    Constant,
}

impl Schedule {
    pub fn lr(self, epoch: usize, total: usize, lr0: f64) -> f64 {
        match self {
            Self::Cosine => cosine_lr(epoch, total, lr0),
            Self::Constant => lr0,
        }
    }
}

/// `0.5 lr0 (1 + cos(pi epoch / total))`, floored at zero and held there past `total`.
pub fn cosine_lr(epoch: usize, total: usize, lr0: f64) -> f64 {
    if total == 0 {
        return lr0;
    }
    let t = (epoch as f64 / total as f64).min(1.0);
    (0.5 * lr0 * (1.0 + (std::f64::consts::PI * t).cos())).max(0.0)
}
