//! End-to-end acceptance checks, one line per criterion.
//!
//! `cargo test -p compol-cli --test acceptance -- 2 5` runs a subset. Failures are
//! reported in the summary; set `COMPOL_ACCEPTANCE_STRICT=1` to turn them into a
//! nonzero exit status.

use std::fmt;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use compol_cli::config::DataConfig;
use compol_cli::gradcheck::{self, Module};
use compol_cli::ExperimentConfig;
use compol_core::aggregation::{attention_aggregate, gru_step, AttnVars, GruVars};
use compol_core::layers::fourier_layer;
use compol_core::{process_seed, Activation, Aggregation, Architecture, CompolConfig, CompolModel};
use compol_datagen::dataset::{initial_condition, sample_rng};
use compol_datagen::spectral::{subsample, to_spectral, Grid};
use compol_datagen::{
    etdrk4_solve, generate_samples, Etdrk4, GrfSampler, Record, SystemId, SystemSpec,
};
use compol_tensor::{fft, Real, Tape, Tensor, Var};
use compol_train::{train, RunRecord, TrainConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skipped(String),
}

impl Verdict {
    fn from(ok: bool, detail: String) -> Self {
        if ok {
            Self::Pass(detail)
        } else {
            Self::Fail(detail)
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Self::Pass(_) => "PASS",
            Self::Fail(_) => "FAIL",
            Self::Skipped(_) => "SKIPPED",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (Self::Pass(d) | Self::Fail(d) | Self::Skipped(d)) = self;
        write!(f, "{:<7} {d}", self.label())
    }
}

type Criterion = (usize, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 10] = [
    (1, "gradient correctness", gradients),
    (2, "fft fidelity", fft_fidelity),
    (3, "translation equivariance", equivariance),
    (4, "decoupling identity", decoupling),
    (5, "aggregation unit truth", aggregation),
    (6, "solver order", solver),
    (7, "desk-scale ordering", desk_scale),
    (8, "full-protocol lv", full_protocol),
    (9, "parameter accounting", parameters),
    (10, "determinism", determinism),
];

fn main() {
    let wanted: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = Vec::new();
    let (mut passed, mut skipped) = (0, 0);
    for (id, name, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| Verdict::Fail(format!("panicked: {}", panic_text(&e))));
        println!(
            "criterion {id:>2} {name:<26} {verdict} [{:.1}s]",
            start.elapsed().as_secs_f64()
        );
        match verdict {
            Verdict::Pass(_) => passed += 1,
            Verdict::Fail(_) => failed.push(id),
            Verdict::Skipped(_) => skipped += 1,
        }
    }
    println!(
        "acceptance: {passed} passed, {} failed {failed:?}, {skipped} skipped",
        failed.len()
    );
    let strict = std::env::var("COMPOL_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}

fn panic_text(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

fn rand_real<T: Real>(shape: &[usize], seed: u64) -> Tensor<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| T::of(rng.random_range(-1.0..1.0)))
}

fn rand_complex<T: Real>(shape: &[usize], seed: u64) -> Tensor<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let data = (0..2 * n)
        .map(|_| T::of(rng.random_range(-1.0..1.0)))
        .collect();
    Tensor::new_complex(shape, data).unwrap()
}

fn gradients() -> Verdict {
    let start = Instant::now();
    let results = match gradcheck::run(&Module::ALL) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let elapsed = start.elapsed();
    let worst = results
        .iter()
        .max_by(|a, b| a.report.max_rel_error.total_cmp(&b.report.max_rel_error))
        .expect("cases");
    let failing: Vec<String> = results
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.op.clone())
        .collect();
    let models = results.iter().filter(|r| r.module == Module::Model).count();
    Verdict::from(
        failing.is_empty()
            && worst.report.max_rel_error < 1e-4
            && models == gradcheck::model_variants().len()
            && elapsed < Duration::from_secs(120),
        format!(
            "{} cases ({models} full models), max rel err {:.2e} at {}/{}, failing {failing:?}, {:.1}s",
            results.len(),
            worst.report.max_rel_error,
            worst.op,
            worst.location(),
            elapsed.as_secs_f64()
        ),
    )
}

fn direct_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, v)| {
                    let theta = -2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
                    v * Complex64::from_polar(1.0, theta)
                })
                .sum()
        })
        .collect()
}

fn fft_fidelity() -> Verdict {
    let (mut round, mut dft, mut parseval, mut real_round) = (0f64, 0f64, 0f64, 0f64);
    for p in 1..=10 {
        let n = 1usize << p;
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut spec = x.clone();
        fft::fft(&mut spec).unwrap();
        for (a, b) in spec.iter().zip(direct_dft(&x)) {
            dft = dft.max((a - b).norm());
        }
        let energy: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let spectral: f64 = spec.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        parseval = parseval.max((energy - spectral).abs() / energy);
        let mut back = spec;
        fft::ifft(&mut back).unwrap();
        for (a, b) in back.iter().zip(&x) {
            round = round.max((a - b).norm());
        }
        let r: Vec<f64> = x.iter().map(|v| v.re).collect();
        let again = fft::irfft(&fft::rfft(&r).unwrap(), n).unwrap();
        for (a, b) in again.iter().zip(&r) {
            real_round = real_round.max((a - b).abs());
        }
    }
    let worst = round.max(dft).max(parseval).max(real_round);
    Verdict::from(
        worst < 1e-10,
        format!(
            "N=2..1024: round trip {round:.1e}, real round trip {real_round:.1e}, \
             vs direct DFT {dft:.1e}, Parseval rel {parseval:.1e}"
        ),
    )
}

fn layer_shift_error<T: Real>() -> f64 {
    let (w, n) = (6, 64);
    let v = rand_real::<T>(&[2, w, n], 9);
    let wt = rand_real::<T>(&[w, w], 10);
    let b = rand_real::<T>(&[w], 11);
    let r = rand_complex::<T>(&[w, w, 12], 12).map(|x| x * T::of(0.3));
    let layer = |v: &Tensor<T>| {
        let tape = Tape::new();
        let c = |t: &Tensor<T>| tape.constant(t.clone());
        fourier_layer(&c(v), &c(&wt), &c(&b), &c(&r), Activation::Gelu)
            .unwrap()
            .value()
    };
    let base = layer(&v);
    (0..n as isize)
        .map(|s| {
            layer(&v.roll(2, s).unwrap())
                .max_abs_diff(&base.roll(2, s).unwrap())
                .unwrap()
        })
        .fold(0.0, f64::max)
}

fn model_shift_error<T: Real>() -> f64 {
    let mut worst = 0f64;
    for (_, cfg) in gradcheck::model_variants() {
        let cfg = CompolConfig {
            coords: false,
            modes: vec![12],
            ..cfg
        };
        let model = CompolModel::<T>::new(cfg).unwrap();
        let x: Vec<Tensor<T>> = (0..2).map(|m| rand_real(&[2, 1, 64], 20 + m)).collect();
        let base = model.predict(&x).unwrap();
        for s in 0..64isize {
            let shifted: Vec<_> = x.iter().map(|t| t.roll(2, s).unwrap()).collect();
            for (o, b) in model.predict(&shifted).unwrap().iter().zip(&base) {
                worst = worst.max(o.max_abs_diff(&b.roll(2, s).unwrap()).unwrap());
            }
        }
    }
    worst
}

fn equivariance() -> Verdict {
    let (l64, l32) = (layer_shift_error::<f64>(), layer_shift_error::<f32>());
    let (m64, m32) = (model_shift_error::<f64>(), model_shift_error::<f32>());
    Verdict::from(
        l64.max(m64) < 1e-10 && l32.max(m32) < 1e-4,
        format!(
            "N=64, 64 shifts: layer f64 {l64:.1e} f32 {l32:.1e}, \
             model (4 variants) f64 {m64:.1e} f32 {m32:.1e}"
        ),
    )
}

fn independent_fnos<T: Real>(cfg: &CompolConfig, x: &[Tensor<T>]) -> Vec<Tensor<T>> {
    (0..cfg.processes())
        .map(|m| {
            let single = CompolConfig {
                channels: vec![cfg.channels[m]],
                aggregation: Aggregation::None,
                ..cfg.clone()
            };
            CompolModel::<T>::with_process_seeds(single, &[process_seed(cfg.seed, m)])
                .unwrap()
                .predict(&x[m..m + 1])
                .unwrap()
                .remove(0)
        })
        .collect()
}

fn decoupled<T: Real>(aggregation: Aggregation) -> bool {
    let cfg = CompolConfig {
        channels: vec![1, 2, 1],
        layers: 3,
        width: 8,
        modes: vec![4],
        head_width: 16,
        aggregation,
        seed: 11,
        ..CompolConfig::default()
    };
    let mut model = CompolModel::<T>::new(cfg.clone()).unwrap();
    let output_params = match aggregation {
        Aggregation::Gru => ".gru.",
        Aggregation::Attention => ".attn.a.",
        Aggregation::Skip => ".skip.",
        Aggregation::None => "",
    };
    let zeroed: Vec<(String, Tensor<T>)> = model
        .params()
        .iter()
        .filter(|(name, _)| !output_params.is_empty() && name.contains(output_params))
        .map(|(name, t)| (name.to_string(), t.zeros_like()))
        .collect();
    for (name, t) in zeroed {
        model.params_mut().set(&name, t).unwrap();
    }
    let x: Vec<Tensor<T>> = cfg
        .channels
        .iter()
        .enumerate()
        .map(|(m, &c)| rand_real(&[3, c, 32], 30 + m as u64))
        .collect();
    let coupled = model.predict(&x).unwrap();
    coupled
        .iter()
        .zip(independent_fnos(&cfg, &x))
        .all(|(a, b)| a.bit_eq(&b))
}

fn decoupling() -> Verdict {
    let kinds = [
        Aggregation::None,
        Aggregation::Gru,
        Aggregation::Attention,
        Aggregation::Skip,
    ];
    let results: Vec<(Aggregation, bool, bool)> = kinds
        .iter()
        .map(|&k| (k, decoupled::<f32>(k), decoupled::<f64>(k)))
        .collect();
    Verdict::from(
        results.iter().all(|&(_, a, b)| a && b),
        format!("M=3, bit-identical (f32, f64): {results:?}"),
    )
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn entry(v: &Var<'_, f64>, i: usize) -> f64 {
    v.value().data()[i]
}

/// The GRU equations evaluated one grid point at a time.
fn gru_reference(x: &Tensor<f64>, z: &Tensor<f64>, p: &GruVars<'_, f64>) -> Vec<f64> {
    let (b, dmix, g) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let dh = z.shape()[1];
    let mut out = vec![0.0; b * dh * g];
    for bb in 0..b {
        for n in 0..g {
            let xv: Vec<f64> = (0..dmix)
                .map(|c| x.data()[(bb * dmix + c) * g + n])
                .collect();
            let zv: Vec<f64> = (0..dh).map(|c| z.data()[(bb * dh + c) * g + n]).collect();
            let gate = |w: &Var<'_, f64>, u: &Var<'_, f64>, bias: &Var<'_, f64>, h: &[f64], i| {
                let mut s = entry(bias, i);
                for c in 0..dmix {
                    s += entry(w, i * dmix + c) * xv[c];
                }
                for c in 0..dh {
                    s += entry(u, i * dh + c) * h[c];
                }
                s
            };
            let q: Vec<f64> = (0..dh)
                .map(|i| sigmoid(gate(&p.wq, &p.uq, &p.bq, &zv, i)))
                .collect();
            let rz: Vec<f64> = (0..dh)
                .map(|i| sigmoid(gate(&p.wr, &p.ur, &p.br, &zv, i)) * zv[i])
                .collect();
            for i in 0..dh {
                let cand = gate(&p.wz, &p.uz, &p.bz, &rz, i).tanh();
                out[(bb * dh + i) * g + n] = q[i] * zv[i] + (1.0 - q[i]) * cand;
            }
        }
    }
    out
}

fn gru_vars<'t>(
    tape: &'t Tape<f64>,
    dmix: usize,
    dh: usize,
    seed: u64,
    zero: bool,
) -> GruVars<'t, f64> {
    let m = |shape: &[usize], s: u64| {
        let t = rand_real::<f64>(shape, seed + s);
        tape.constant(if zero { t.zeros_like() } else { t })
    };
    GruVars {
        wq: m(&[dh, dmix], 1),
        wr: m(&[dh, dmix], 2),
        wz: m(&[dh, dmix], 3),
        uq: m(&[dh, dh], 4),
        ur: m(&[dh, dh], 5),
        uz: m(&[dh, dh], 6),
        bq: m(&[dh], 7),
        br: m(&[dh], 8),
        bz: m(&[dh], 9),
    }
}

/// Softmax attention at each grid point with the query taken from the token mean.
fn attention_reference(tokens: &[Tensor<f64>], p: &AttnVars<'_, f64>) -> (Vec<f64>, Vec<f64>) {
    let (b, dh, g) = (
        tokens[0].shape()[0],
        tokens[0].shape()[1],
        tokens[0].shape()[2],
    );
    let (dk, h, nt) = (p.k.shape()[0], p.heads, tokens.len());
    let apply = |w: &Var<'_, f64>, bias: Option<&Var<'_, f64>>, v: &[f64]| -> Vec<f64> {
        (0..w.shape()[0])
            .map(|i| {
                bias.map_or(0.0, |b| entry(b, i))
                    + (0..dh).map(|c| entry(w, i * dh + c) * v[c]).sum::<f64>()
            })
            .collect()
    };
    let mut z = vec![0.0; b * dh * g];
    let mut alpha = vec![0.0; b * h * nt * g];
    for bb in 0..b {
        for n in 0..g {
            let vecs: Vec<Vec<f64>> = tokens
                .iter()
                .map(|t| (0..dh).map(|c| t.data()[(bb * dh + c) * g + n]).collect())
                .collect();
            let mean: Vec<f64> = (0..dh)
                .map(|c| vecs.iter().map(|v| v[c]).sum::<f64>() / nt as f64)
                .collect();
            let q = apply(&p.q.0, Some(&p.q.1), &mean);
            let keys: Vec<Vec<f64>> = vecs.iter().map(|v| apply(&p.k, None, v)).collect();
            let vals: Vec<Vec<f64>> = vecs
                .iter()
                .map(|v| apply(&p.a.0, Some(&p.a.1), v))
                .collect();
            let (hk, hv) = (dk / h, dh / h);
            for head in 0..h {
                let scores: Vec<f64> = keys
                    .iter()
                    .map(|k| {
                        (0..hk)
                            .map(|c| q[head * hk + c] * k[head * hk + c])
                            .sum::<f64>()
                            / (hk as f64).sqrt()
                    })
                    .collect();
                let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
                let total: f64 = e.iter().sum();
                for j in 0..nt {
                    let a = e[j] / total;
                    alpha[((bb * h + head) * nt + j) * g + n] = a;
                    for c in 0..hv {
                        z[(bb * dh + head * hv + c) * g + n] += a * vals[j][head * hv + c];
                    }
                }
            }
        }
    }
    (z, alpha)
}

fn attn_vars<'t>(
    tape: &'t Tape<f64>,
    dh: usize,
    dk: usize,
    heads: usize,
    seed: u64,
) -> AttnVars<'t, f64> {
    let c = |shape: &[usize], s: u64| tape.constant(rand_real::<f64>(shape, seed + s));
    AttnVars {
        q: (c(&[dk, dh], 1), c(&[dk], 2)),
        k: c(&[dk, dh], 3),
        a: (c(&[dh, dh], 5), c(&[dh], 6)),
        heads,
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Largest deviation of per-location weight sums from 1 and of each weight from `uniform`.
fn weight_errors(alpha: &Tensor<f64>, uniform: Option<f64>) -> f64 {
    let s = alpha.shape();
    let (rows, nt, g) = (s[0] * s[1], s[2], s[3]);
    let mut worst = 0f64;
    for r in 0..rows {
        for n in 0..g {
            let ws: Vec<f64> = (0..nt)
                .map(|j| alpha.data()[(r * nt + j) * g + n])
                .collect();
            worst = worst.max((ws.iter().sum::<f64>() - 1.0).abs());
            if let Some(u) = uniform {
                worst = ws.iter().fold(worst, |acc, w| acc.max((w - u).abs()));
            }
        }
    }
    worst
}

fn aggregation() -> Verdict {
    let tape = Tape::new();
    let zero = gru_vars(&tape, 4, 4, 0, true);
    let x = tape.constant(rand_real::<f64>(&[2, 4, 8], 1));
    let prev = tape.constant(rand_real::<f64>(&[2, 4, 8], 2));
    let next = gru_step(&x, &prev, &zero).unwrap().value();
    let halves = next
        .data()
        .iter()
        .zip(prev.value().data())
        .all(|(a, b)| *a == 0.5 * b);

    let mut gru_ref = 0f64;
    for seed in 0..8 {
        let p = gru_vars(&tape, 3, 4, 10 * seed, false);
        let x = rand_real::<f64>(&[2, 3, 5], 100 + seed);
        let z = rand_real::<f64>(&[2, 4, 5], 200 + seed);
        let got = gru_step(&tape.constant(x.clone()), &tape.constant(z.clone()), &p)
            .unwrap()
            .value();
        gru_ref = gru_ref.max(max_diff(got.data(), &gru_reference(&x, &z, &p)));
    }

    let (mut attn_ref, mut sums, mut uniform) = (0f64, 0f64, 0f64);
    for (heads, dk) in [(1, 4), (1, 2), (2, 4)] {
        for seed in 0..4 {
            let p = attn_vars(&tape, 4, dk, heads, 50 * seed);
            let tokens: Vec<_> = (0..3)
                .map(|j| rand_real::<f64>(&[2, 4, 5], 900 + 10 * seed + j))
                .collect();
            let vars: Vec<_> = tokens.iter().map(|t| tape.constant(t.clone())).collect();
            let out = attention_aggregate(&tape, &vars, &p).unwrap();
            let (z, alpha) = (out.z.value(), out.alpha.value());
            let (zr, ar) = attention_reference(&tokens, &p);
            attn_ref = attn_ref
                .max(max_diff(z.data(), &zr))
                .max(max_diff(alpha.data(), &ar));
            sums = sums.max(weight_errors(&alpha, None));

            let same = rand_real::<f64>(&[2, 4, 5], 700 + seed);
            for m in [2usize, 3, 5] {
                let vars: Vec<_> = (0..m).map(|_| tape.constant(same.clone())).collect();
                let alpha = attention_aggregate(&tape, &vars, &p).unwrap().alpha.value();
                uniform = uniform.max(weight_errors(&alpha, Some(1.0 / m as f64)));
            }
        }
    }
    Verdict::from(
        halves && gru_ref < 1e-12 && attn_ref < 1e-12 && sums < 1e-6 && uniform < 1e-6,
        format!(
            "zero-weight GRU halves state exactly: {halves}; GRU vs scalar {gru_ref:.1e}; \
             attention vs scalar {attn_ref:.1e}; weight sums {sums:.1e}; identical latents vs 1/M {uniform:.1e}"
        ),
    )
}

fn distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn observed_order(spec: &SystemSpec, n: usize, seed: u64) -> f64 {
    let sampler = GrfSampler::new(&spec.grf(n)).unwrap();
    let u0 = initial_condition(spec, &sampler, &mut sample_rng(seed, 0));
    let runs: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|i| {
            let mut s = spec.clone();
            s.dt = spec.dt / f64::from(1 << i);
            Etdrk4::new(&s, n)
                .unwrap()
                .solve(&u0, Record::Final)
                .unwrap()
                .last()
                .to_vec()
        })
        .collect();
    (distance(&runs[0], &runs[1]) / distance(&runs[1], &runs[2])).log2()
}

fn decay_error(id: SystemId) -> f64 {
    let mut spec = SystemSpec::default_for(id);
    spec.horizon = 2.0;
    spec.dt = 0.1;
    let n = 32;
    let grid = Grid::new(n, spec.dims()).unwrap();
    let diffusivities = spec.physics.diffusivities();
    let solver = Etdrk4::new(&spec, n).unwrap().without_nonlinearity();
    let mut worst = 0f64;
    for k in [1usize, 3, 10] {
        let wave: Vec<f64> = (0..grid.cells())
            .map(|c| {
                (2.0 * std::f64::consts::PI * (k * (c % n) + (c / n) % n) as f64 / n as f64).cos()
            })
            .collect();
        let u0 = vec![wave.clone(); diffusivities.len()];
        let out = solver.solve(&u0, Record::Final).unwrap();
        let bin = if grid.dims == 2 { n + k } else { k };
        let k2 = grid.squared_wavenumbers(spec.domain_length)[bin];
        let before = to_spectral(&wave, grid).unwrap()[bin];
        for (field, d) in out.last().iter().zip(&diffusivities) {
            let after = to_spectral(field, grid).unwrap()[bin];
            let expected = (-d * k2 * spec.horizon).exp();
            worst = worst.max((after / before - expected).norm());
        }
    }
    worst
}

fn solver() -> Verdict {
    let mut specs = Vec::new();
    for (id, dt) in [
        (SystemId::Lv, 0.125),
        (SystemId::Bz, 0.0125),
        (SystemId::Gs, 0.5),
        (SystemId::Burgers, 0.02),
    ] {
        let mut spec = SystemSpec::default_for(id);
        spec.dt = dt;
        if id == SystemId::Burgers {
            spec.horizon = 0.2;
        }
        specs.push(spec);
    }
    let orders: Vec<(SystemId, f64)> = specs
        .iter()
        .map(|s| {
            let low = (0..4)
                .map(|seed| observed_order(s, 128, seed))
                .fold(f64::INFINITY, f64::min);
            (s.id(), low)
        })
        .collect();
    let decay = SystemId::ALL
        .iter()
        .map(|&id| decay_error(id))
        .fold(0.0, f64::max);

    let bz = SystemSpec::default_for(SystemId::Bz);
    let fine = bz.fine_grid().unwrap();
    let sampler = GrfSampler::new(&bz.grf(fine.n)).unwrap();
    let u0 = initial_condition(&bz, &sampler, &mut sample_rng(4, 0));
    let finite = etdrk4_solve(&bz, &u0, Record::Final)
        .map(|out| {
            out.last().iter().all(|f| {
                f.iter().all(|v| v.is_finite())
                    && subsample(f, fine, bz.resolution)
                        .unwrap()
                        .iter()
                        .all(|v| v.is_finite())
            })
        })
        .unwrap_or(false);
    let shown: Vec<String> = orders
        .iter()
        .map(|(id, o)| format!("{id} {o:.2}"))
        .collect();
    Verdict::from(
        orders.iter().all(|&(_, o)| o >= 3.5) && decay < 1e-12 && finite,
        format!(
            "min order over 4 seeds at N=128: {}; diffusion decay err {decay:.1e}; \
             bz {}->{} finite: {finite}",
            shown.join(", "),
            fine.n,
            bz.resolution
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn desk_scale() -> Verdict {
    let start = Instant::now();
    let mut spec = SystemSpec::default_for(SystemId::Lv);
    spec.resolution = 64;
    let data = generate_samples(&spec, 192, 0).unwrap();
    let train_set = data.select(&(0..128).collect::<Vec<_>>()).unwrap();
    let test_set = data.select(&(128..192).collect::<Vec<_>>()).unwrap();
    let base = CompolConfig {
        channels: vec![1, 1],
        layers: 4,
        width: 32,
        modes: vec![12],
        ..CompolConfig::default()
    };
    let variants = [
        ("fno_c", Architecture::FnoConcat, Aggregation::None),
        ("compol_atn", Architecture::Compol, Aggregation::Attention),
        ("compol_rnn", Architecture::Compol, Aggregation::Gru),
    ];
    let mut medians = Vec::new();
    for (label, architecture, aggregation) in variants {
        let mut finals = Vec::new();
        for seed in 0..3 {
            let cfg = CompolConfig {
                architecture,
                aggregation,
                seed,
                ..base.clone()
            };
            let tc = TrainConfig {
                epochs: 100,
                seed,
                ..TrainConfig::default()
            };
            let out = train::<f32>(&cfg, &tc, &train_set, &test_set).unwrap();
            finals.push(out.record.epochs.last().expect("epochs").test_aggregate);
        }
        let shown: Vec<String> = finals.iter().map(|e| format!("{e:.3e}")).collect();
        println!(
            "    {label:<11} test rel L2 per seed [{}]",
            shown.join(", ")
        );
        medians.push(median(finals));
    }
    let elapsed = start.elapsed();
    let (atn, rnn) = (medians[1] / medians[0], medians[2] / medians[0]);
    Verdict::from(
        atn <= 0.7 && rnn <= 0.7 && elapsed <= Duration::from_secs(30 * 60),
        format!(
            "median test rel L2 after 100 epochs: fno_c {:.3e}, atn {:.3e} ({atn:.2}x), \
             rnn {:.3e} ({rnn:.2}x), required <= 0.70x; {:.0}s",
            medians[0],
            medians[1],
            medians[2],
            elapsed.as_secs_f64()
        ),
    )
}

fn full_protocol() -> Verdict {
    Verdict::Skipped(
        "optional 512-sample, N=256, 500-epoch, 5-fold run is not part of this suite".into(),
    )
}

fn parameters() -> Verdict {
    let mut exact = true;
    for (width, modes) in [(8, 4), (32, 12), (64, 16)] {
        let cfg = CompolConfig {
            width,
            modes: vec![modes],
            ..CompolConfig::default()
        };
        let model = CompolModel::<f32>::new(cfg).unwrap();
        for (name, t) in model.params().iter() {
            if name.ends_with(".r") {
                exact &= t.data().len() == 2 * modes * width * width;
            }
        }
    }
    let fno = CompolConfig {
        architecture: Architecture::FnoConcat,
        aggregation: Aggregation::None,
        ..CompolConfig::default()
    };
    let count = CompolModel::<f32>::new(fno).unwrap().param_count();
    let reference = 583_200.0;
    let rel = count.total as f64 / reference - 1.0;
    for line in count.to_string().lines() {
        println!("    {line}");
    }
    Verdict::from(
        exact && rel.abs() < 0.10,
        format!(
            "spectral layers hold 2*modes*width^2 real scalars: {exact}; fno_c total {} ({:+.1}% vs 0.5832M)",
            count.total,
            100.0 * rel,
        ),
    )
}

fn compol(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_compol"));
    if let Some(t) = threads {
        cmd.env("COMPOL_THREADS", t);
    }
    let out = cmd.args(args).output().expect("binary runs");
    assert!(out.status.success(), "compol {args:?}: {out:?}");
    out
}

fn same_files(a: &Path, b: &Path, files: &[&str]) -> bool {
    files
        .iter()
        .all(|f| fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap())
}

fn record(dir: &Path) -> RunRecord {
    RunRecord::from_jsonl(&fs::read_to_string(dir.join("record.jsonl")).unwrap())
        .unwrap()
        .without_timing()
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |name: &str| tmp.path().join(name);
    let path = |name: &str| dir(name).display().to_string();
    let gen = |out: &str, threads: &str| {
        compol(
            &[
                "gen-data",
                "--system",
                "lv",
                "--n",
                "12",
                "--resolution",
                "32",
                "--seed",
                "5",
                "--param",
                "fine_factor=2",
                "--param",
                "horizon=2",
                "--param",
                "dt=0.05",
                "--out",
                &path(out),
            ],
            Some(threads),
        )
    };
    gen("d1", "1");
    gen("d4", "4");
    gen("d4b", "4");
    let data_same = same_files(&dir("d1"), &dir("d4"), &["data.cmpl", "manifest.json"])
        && same_files(&dir("d4"), &dir("d4b"), &["data.cmpl", "manifest.json"]);

    let mut system = SystemSpec::default_for(SystemId::Lv);
    system.resolution = 32;
    system.fine_factor = 2;
    system.horizon = 2.0;
    system.dt = 0.05;
    let cfg = ExperimentConfig {
        system,
        data: DataConfig {
            n_train: 8,
            n_test: 4,
            resolution: 32,
            seed: 5,
        },
        model: CompolConfig {
            channels: vec![1, 1],
            layers: 2,
            width: 8,
            modes: vec![6],
            head_width: 16,
            ..CompolConfig::default()
        },
        train: TrainConfig {
            epochs: 3,
            batch: 3,
            lr: 5e-3,
            ..TrainConfig::default()
        },
        paths: Default::default(),
    };
    fs::write(dir("exp.json"), serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let run = |out: &str, model: &str, threads: &str| {
        compol(
            &[
                "train",
                "--config",
                &path("exp.json"),
                "--data",
                &path("d1"),
                "--out",
                &path(out),
                "--model",
                model,
            ],
            Some(threads),
        )
    };
    let files = ["checkpoint.cmpl", "config.json", "run.json"];
    let mut train_same = true;
    let mut eval_same = true;
    for model in ["compol-atn", "compol-rnn", "fno-c"] {
        let (a, b) = (format!("{model}-a"), format!("{model}-b"));
        run(&a, model, "1");
        run(&b, model, "4");
        train_same &=
            same_files(&dir(&a), &dir(&b), &files) && record(&dir(&a)) == record(&dir(&b));
        let eval = |run: &str, threads: &str| {
            let ckpt = dir(run).join("checkpoint.cmpl").display().to_string();
            compol(
                &["eval", "--checkpoint", &ckpt, "--data", &path("d4")],
                Some(threads),
            )
            .stdout
        };
        eval_same &= eval(&a, "1") == eval(&b, "4") && eval(&a, "4") == eval(&a, "4");
    }
    Verdict::from(
        data_same && train_same && eval_same,
        format!(
            "gen-data 1 vs 4 threads identical: {data_same}; train (3 models, 1 vs 4 threads) identical: {train_same}; \
             eval identical: {eval_same}"
        ),
    )
}
