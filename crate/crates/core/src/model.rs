use std::fmt;

use compol_tensor::{derive_seed, Real, Tape, Tensor, Var};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::aggregation::{
    attention_aggregate, gru_step, inject, mix_processes, skip_aggregate, AttnVars, GruVars,
};
use crate::config::{Aggregation, Architecture, CompolConfig, InjectKind, MixKind};
use crate::error::{CoreError, Result};
use crate::layers::{fourier_layer, lift, project};
use crate::params::{Bound, Init, ParamStore};

/// Coupled operator (or its channel-concatenated baseline) with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CompolModel<T: Real> {
    config: CompolConfig,
    store: ParamStore<T>,
}

/// Seed of process `m`'s branch under a model seed.
pub fn process_seed(seed: u64, m: usize) -> u64 {
    derive_seed(seed, &format!("process{m}"))
}

impl<T: Real> CompolModel<T> {
    pub fn new(config: CompolConfig) -> Result<Self> {
        let seeds: Vec<u64> = (0..config.network().processes())
            .map(|m| process_seed(config.seed, m))
            .collect();
        Self::with_process_seeds(config, &seeds)
    }

    /// Initializes each process branch from an explicit seed, so a branch can be
    /// reproduced by a standalone single-process model.
    pub fn with_process_seeds(config: CompolConfig, seeds: &[u64]) -> Result<Self> {
        config.validate()?;
        let net = config.network();
        if seeds.len() != net.processes() {
            return Err(CoreError::Config(format!(
                "{} process seeds for {} processes",
                seeds.len(),
                net.processes()
            )));
        }
        let mut store = ParamStore::new();
        let w = net.width;
        let coords = if net.coords { net.dims() } else { 0 };
        let mut spectral_shape = vec![w, w];
        spectral_shape.extend_from_slice(&net.modes);
        for (m, (&c, &seed)) in net.channels.iter().zip(seeds).enumerate() {
            let init = Init::new(seed);
            let p = format!("p{m}");
            init.affine(&mut store, "lift", &format!("{p}.lift"), w, c + coords);
            for l in 0..net.layers {
                let local = format!("layer{l}");
                init.affine(&mut store, &local, &format!("{p}.{local}"), w, w);
                init.spectral(
                    &mut store,
                    &format!("{local}.r"),
                    &format!("{p}.{local}.r"),
                    &spectral_shape,
                );
            }
            let hw = net.head_width;
            init.affine(&mut store, "head1", &format!("{p}.head1"), hw, w);
            init.affine(&mut store, "head2", &format!("{p}.head2"), c, hw);
        }
        let init = Init::new(derive_seed(config.seed, "aggregation"));
        let mm = net.processes();
        for l in 0..net.layers {
            let a = format!("agg.layer{l}");
            let uses_mix = matches!(net.aggregation, Aggregation::Gru | Aggregation::Skip);
            if uses_mix && net.mix == MixKind::Linear {
                init.affine(
                    &mut store,
                    &format!("{a}.mix"),
                    &format!("{a}.mix"),
                    w,
                    mm * w,
                );
            }
            match net.aggregation {
                Aggregation::Gru => {
                    for gate in ["q", "r", "z"] {
                        let wn = format!("{a}.gru.w{gate}");
                        init.matrix(&mut store, &wn, &wn, w, w);
                        let un = format!("{a}.gru.u{gate}");
                        init.matrix(&mut store, &un, &un, w, w);
                        store.insert(format!("{a}.gru.b{gate}"), Tensor::zeros(&[w]));
                    }
                }
                Aggregation::Attention => {
                    let dk = net.key_width();
                    let q = format!("{a}.attn.q");
                    init.affine(&mut store, &q, &q, dk, w);
                    let k = format!("{a}.attn.k");
                    init.matrix(&mut store, &k, &format!("{k}.w"), dk, w);
                    let v = format!("{a}.attn.a");
                    init.affine(&mut store, &v, &v, w, w);
                }
                Aggregation::Skip => {
                    let full = format!("{a}.skip");
                    init.affine(&mut store, &full, &full, w, w);
                }
                Aggregation::None => {}
            }
            if net.aggregation != Aggregation::None && net.inject == InjectKind::ConcatReduce {
                for m in 0..mm {
                    let full = format!("inject.layer{l}.p{m}");
                    init.affine(&mut store, &full, &full, w, 2 * w);
                }
            }
        }
        Ok(Self { config, store })
    }

    /// Wraps an existing parameter set after checking it against the config's layout.
    pub fn from_parts(config: CompolConfig, store: ParamStore<T>) -> Result<Self> {
        let reference = Self::new(config.clone())?;
        if reference.store.len() != store.len() {
            return Err(CoreError::Config(format!(
                "{} parameters given, the config implies {}",
                store.len(),
                reference.store.len()
            )));
        }
        for (name, expected) in reference.store.iter() {
            let found = store.get(name)?;
            if found.shape() != expected.shape() || found.is_complex() != expected.is_complex() {
                return Err(CoreError::ParamShape {
                    name: name.to_string(),
                    found: found.shape().to_vec(),
                    expected: expected.shape().to_vec(),
                });
            }
        }
        Ok(Self { config, store })
    }

    pub fn config(&self) -> &CompolConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    pub fn into_params(self) -> ParamStore<T> {
        self.store
    }

    pub fn bind<'t>(&self, tape: &'t Tape<T>, trainable: bool) -> Bound<'t, T> {
        self.store.bind(tape, trainable)
    }

    /// Maps per-process inputs `[batch, c_m, grid...]` to per-process outputs of the same shape.
    pub fn forward<'t>(
        &self,
        tape: &'t Tape<T>,
        params: &Bound<'t, T>,
        inputs: &[Var<'t, T>],
    ) -> Result<Vec<Var<'t, T>>> {
        let cfg = &self.config;
        if inputs.len() != cfg.processes() {
            return Err(CoreError::Config(format!(
                "{} inputs for {} processes",
                inputs.len(),
                cfg.processes()
            )));
        }
        let lead = inputs[0].shape();
        for (f, &c) in inputs.iter().zip(&cfg.channels) {
            let s = f.shape();
            if s.len() != 2 + cfg.dims() || s[1] != c || s[0] != lead[0] || s[2..] != lead[2..] {
                return Err(CoreError::Config(format!(
                    "input {s:?} does not match {c} channels on a shared {}-D grid",
                    cfg.dims()
                )));
            }
        }
        cfg.check_grid(&lead[2..])?;
        match cfg.architecture {
            Architecture::Compol => network_forward(cfg, tape, params, inputs),
            Architecture::FnoConcat => {
                let stacked = tape.concat(inputs, 1)?;
                let out = network_forward(&cfg.network(), tape, params, &[stacked])?.remove(0);
                let mut start = 0;
                let mut outputs = Vec::with_capacity(inputs.len());
                for &c in &cfg.channels {
                    let idx: Vec<usize> = (start..start + c).collect();
                    outputs.push(out.gather(1, &idx)?);
                    start += c;
                }
                Ok(outputs)
            }
        }
    }

    /// Tape-free evaluation.
    pub fn predict(&self, inputs: &[Tensor<T>]) -> Result<Vec<Tensor<T>>> {
        let tape = Tape::new();
        let params = self.bind(&tape, false);
        let vars: Vec<_> = inputs.iter().map(|x| tape.constant(x.clone())).collect();
        Ok(self
            .forward(&tape, &params, &vars)?
            .iter()
            .map(|v| v.value())
            .collect())
    }

    pub fn param_count(&self) -> ParamCount {
        let mut groups: IndexMap<String, usize> = IndexMap::new();
        for (name, t) in self.store.iter() {
            let group = if name.starts_with("agg.") {
                "aggregation"
            } else if name.starts_with("inject.") {
                "inject"
            } else if name.contains(".lift.") {
                "lift"
            } else if name.contains(".head") {
                "head"
            } else if name.ends_with(".r") {
                "spectral"
            } else {
                "pointwise"
            };
            *groups.entry(group.to_string()).or_default() += t.data().len();
        }
        ParamCount {
            total: groups.values().sum(),
            groups,
        }
    }
}

fn network_forward<'t, T: Real>(
    cfg: &CompolConfig,
    tape: &'t Tape<T>,
    params: &Bound<'t, T>,
    inputs: &[Var<'t, T>],
) -> Result<Vec<Var<'t, T>>> {
    let mm = cfg.processes();
    let mut latents = Vec::with_capacity(mm);
    for (m, f) in inputs.iter().enumerate() {
        let (w, b) = params.affine(&format!("p{m}.lift"))?;
        latents.push(lift(tape, f, cfg.coords, &w, &b)?);
    }
    let mut history: Vec<Var<'t, T>> = Vec::new();
    let mut z: Option<Var<'t, T>> = None;
    for l in 0..cfg.layers {
        let a = format!("agg.layer{l}");
        let mixed = || -> Result<Var<'t, T>> {
            let linear = match cfg.mix {
                MixKind::Linear => Some(params.affine(&format!("{a}.mix"))?),
                MixKind::Add => None,
            };
            mix_processes(tape, &latents, cfg.mix, linear)
        };
        let zero = || tape.constant(latents[0].value().zeros_like());
        z = match cfg.aggregation {
            Aggregation::None => None,
            Aggregation::Gru => {
                let g = |n: &str| params.get(&format!("{a}.gru.{n}"));
                let vars = GruVars {
                    wq: g("wq")?,
                    wr: g("wr")?,
                    wz: g("wz")?,
                    uq: g("uq")?,
                    ur: g("ur")?,
                    uz: g("uz")?,
                    bq: g("bq")?,
                    br: g("br")?,
                    bz: g("bz")?,
                };
                let prev = z.unwrap_or_else(zero);
                Some(gru_step(&mixed()?, &prev, &vars)?)
            }
            Aggregation::Skip => {
                let (w, b) = params.affine(&format!("{a}.skip"))?;
                let prev = z.unwrap_or_else(zero);
                Some(skip_aggregate(&mixed()?, &prev, &w, &b)?)
            }
            Aggregation::Attention => {
                let vars = AttnVars {
                    q: params.affine(&format!("{a}.attn.q"))?,
                    k: params.get(&format!("{a}.attn.k.w"))?,
                    a: params.affine(&format!("{a}.attn.a"))?,
                    heads: cfg.attention.heads,
                };
                let tokens: &[Var<'t, T>] = if cfg.attention.history {
                    history.extend_from_slice(&latents);
                    &history
                } else {
                    &latents
                };
                Some(attention_aggregate(tape, tokens, &vars)?.z)
            }
        };
        for (m, v) in latents.iter_mut().enumerate() {
            let input = match &z {
                Some(z) => {
                    let reduce = match cfg.inject {
                        InjectKind::ConcatReduce => {
                            Some(params.affine(&format!("inject.layer{l}.p{m}"))?)
                        }
                        InjectKind::Add => None,
                    };
                    inject(tape, v, z, cfg.inject, reduce)?
                }
                None => *v,
            };
            let p = format!("p{m}.layer{l}");
            let (w, b) = params.affine(&p)?;
            let r = params.get(&format!("{p}.r"))?;
            *v = fourier_layer(&input, &w, &b, &r, cfg.activation)?;
        }
    }
    latents
        .iter()
        .enumerate()
        .map(|(m, v)| {
            let (w1, b1) = params.affine(&format!("p{m}.head1"))?;
            let (w2, b2) = params.affine(&format!("p{m}.head2"))?;
            project(v, &w1, &b1, &w2, &b2)
        })
        .collect()
}

/// Parameter totals per component, counted in real scalars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCount {
    pub groups: IndexMap<String, usize>,
    pub total: usize,
}

impl ParamCount {
    pub const CONVENTION: &'static str = "real scalars; each complex spectral weight counts 2; \
        every affine map counts weight and bias; coordinate channels count as lift inputs; \
        head is width -> 128 -> out with biases";
}

impl fmt::Display for ParamCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "convention: {}", Self::CONVENTION)?;
        for (group, n) in &self.groups {
            writeln!(f, "{group:>12}: {n}")?;
        }
        write!(f, "{:>12}: {}", "total", self.total)
    }
}
