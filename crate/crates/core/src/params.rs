use std::collections::HashMap;

use compol_tensor::{derive_seed, Gradients, Real, Tape, Tensor, Var};
use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};

/// Named parameter tensors in registration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<T: Real> {
    params: IndexMap<String, Tensor<T>>,
}

impl<T: Real> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            params: IndexMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<T>) {
        self.params.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.params
            .get(name)
            .ok_or_else(|| CoreError::MissingParam(name.to_string()))
    }

    /// Replaces an existing parameter; the shape and dtype must match.
    pub fn set(&mut self, name: &str, value: Tensor<T>) -> Result<()> {
        let slot = self
            .params
            .get_mut(name)
            .ok_or_else(|| CoreError::MissingParam(name.to_string()))?;
        if slot.shape() != value.shape() || slot.is_complex() != value.is_complex() {
            return Err(CoreError::ParamShape {
                name: name.to_string(),
                found: value.shape().to_vec(),
                expected: slot.shape().to_vec(),
            });
        }
        *slot = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of real scalars (a complex entry counts as two).
    pub fn scalar_count(&self) -> usize {
        self.params.values().map(|t| t.data().len()).sum()
    }

    /// Registers every parameter on `tape`, as differentiable leaves when `trainable`.
    pub fn bind<'t>(&self, tape: &'t Tape<T>, trainable: bool) -> Bound<'t, T> {
        let vars = self
            .params
            .iter()
            .map(|(name, value)| {
                let var = if trainable {
                    tape.var(value.clone())
                } else {
                    tape.constant(value.clone())
                };
                (name.clone(), var)
            })
            .collect();
        Bound { vars }
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|(k, v)| (k.clone(), v.cast()))
                .collect(),
        }
    }
}

/// Parameters registered on one tape.
pub struct Bound<'t, T: Real> {
    vars: HashMap<String, Var<'t, T>>,
}

impl<'t, T: Real> Bound<'t, T> {
    /// Wraps variables already recorded on a tape.
    pub fn from_vars(vars: impl IntoIterator<Item = (String, Var<'t, T>)>) -> Self {
        Self {
            vars: vars.into_iter().collect(),
        }
    }

    pub fn get(&self, name: &str) -> Result<Var<'t, T>> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| CoreError::MissingParam(name.to_string()))
    }

    /// `(weight, bias)` of the affine map stored under `prefix`.
    pub fn affine(&self, prefix: &str) -> Result<(Var<'t, T>, Var<'t, T>)> {
        Ok((
            self.get(&format!("{prefix}.w"))?,
            self.get(&format!("{prefix}.b"))?,
        ))
    }

    /// Gradients for every bound parameter, in the store's order.
    pub fn gradients(
        &self,
        store: &ParamStore<T>,
        grads: &Gradients<T>,
    ) -> Result<IndexMap<String, Tensor<T>>> {
        store
            .names()
            .map(|name| Ok((name.to_string(), grads.get(&self.get(name)?)?)))
            .collect()
    }
}

/// Seeded parameter initializer; each parameter draws from its own stream.
pub(crate) struct Init {
    seed: u64,
}

impl Init {
    pub(crate) fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn rng(&self, name: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, name))
    }

    /// Glorot-uniform weight `[out, inp]` with a zero bias `[out]`.
    pub(crate) fn affine<T: Real>(
        &self,
        store: &mut ParamStore<T>,
        local: &str,
        full: &str,
        out: usize,
        inp: usize,
    ) {
        let limit = (6.0 / (inp + out) as f64).sqrt();
        let mut rng = self.rng(local);
        let w = Tensor::from_fn(&[out, inp], |_| T::of(rng.random_range(-limit..limit)));
        store.insert(format!("{full}.w"), w);
        store.insert(format!("{full}.b"), Tensor::zeros(&[out]));
    }

    /// Glorot-uniform matrix without bias.
    pub(crate) fn matrix<T: Real>(
        &self,
        store: &mut ParamStore<T>,
        local: &str,
        full: &str,
        out: usize,
        inp: usize,
    ) {
        let limit = (6.0 / (inp + out) as f64).sqrt();
        let mut rng = self.rng(local);
        let w = Tensor::from_fn(&[out, inp], |_| T::of(rng.random_range(-limit..limit)));
        store.insert(full.to_string(), w);
    }

    /// Complex weights with both parts uniform on `[0, 1/width^2)`.
    pub(crate) fn spectral<T: Real>(
        &self,
        store: &mut ParamStore<T>,
        local: &str,
        full: &str,
        shape: &[usize],
    ) {
        let scale = 1.0 / (shape[0] * shape[1]) as f64;
        let mut rng = self.rng(local);
        let n: usize = shape.iter().product();
        let data = (0..2 * n)
            .map(|_| T::of(scale * rng.random::<f64>()))
            .collect();
        let r = Tensor::new_complex(shape, data).expect("length matches shape");
        store.insert(full.to_string(), r);
    }
}
