//! Finite-difference gradient suites over every differentiable operation, the model
//! layers, the aggregation mechanisms and full models, all at `f64`.

use clap::ValueEnum;
use compol_core::aggregation::{
    attention_aggregate, gru_step, inject, mix_processes, skip_aggregate, AttnVars, GruVars,
};
use compol_core::layers::{affine, fourier_layer, lift, project, spectral_conv};
use compol_core::{
    Activation, Aggregation, Architecture, Bound, CompolConfig, CompolModel, InjectKind, MixKind,
};
use compol_tensor::{finite_diff_check_many, GradCheck, Tape, Tensor, TensorError, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOLERANCE: f64 = 1e-4;

type Checked<T> = Result<T, TensorError>;
const EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Module {
    Tensor,
    Layers,
    Aggregation,
    Model,
}

impl Module {
    pub const ALL: [Module; 4] = [Self::Tensor, Self::Layers, Self::Aggregation, Self::Model];

    pub fn name(self) -> &'static str {
        match self {
            Self::Tensor => "tensor",
            Self::Layers => "layers",
            Self::Aggregation => "aggregation",
            Self::Model => "model",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub module: Module,
    pub op: String,
    pub report: GradCheck,
    /// Names of the checked inputs, indexed like `report.worst.0`.
    pub inputs: Vec<String>,
}

impl CaseResult {
    pub fn passed(&self) -> bool {
        self.report.max_rel_error < TOLERANCE
    }

    pub fn location(&self) -> String {
        let (i, j) = self.report.worst;
        let name = self.inputs.get(i).map(String::as_str).unwrap_or("?");
        format!("{name}[{j}]")
    }
}

fn real(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

fn positive(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| rng.random_range(0.5..1.5))
}

fn complex(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    Tensor::new_complex(
        shape,
        (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .expect("matching length")
}

/// `sum(Re(y * p))` for a fixed random probe `p` shaped like `y`.
fn probe<'t>(tape: &'t Tape<f64>, y: &Var<'t, f64>, seed: u64) -> Checked<Var<'t, f64>> {
    if y.is_complex() {
        let p = tape.constant(complex(&y.shape(), seed));
        y.mul(&p)?.real_part()?.sum_all()
    } else {
        let p = tape.constant(real(&y.shape(), seed));
        y.mul(&p)?.sum_all()
    }
}

fn core<V>(r: compol_core::Result<V>) -> Checked<V> {
    r.map_err(|e| TensorError::Shape(e.to_string()))
}

struct Suite {
    module: Module,
    results: Vec<CaseResult>,
}

impl Suite {
    fn check<F>(&mut self, op: &str, inputs: &[(&str, Tensor<f64>)], f: F) -> Checked<()>
    where
        F: for<'t> Fn(&'t Tape<f64>, &[Var<'t, f64>]) -> Checked<Var<'t, f64>>,
    {
        let values: Vec<Tensor<f64>> = inputs.iter().map(|(_, t)| t.clone()).collect();
        let report = finite_diff_check_many(f, &values, EPS)?;
        self.results.push(CaseResult {
            module: self.module,
            op: op.to_string(),
            report,
            inputs: inputs.iter().map(|(n, _)| n.to_string()).collect(),
        });
        Ok(())
    }
}

fn tensor_suite(s: &mut Suite) -> Checked<()> {
    let a = real(&[2, 3, 4], 1);
    let b = real(&[3, 1], 2);
    s.check("add", &[("a", a.clone()), ("b", b.clone())], |t, x| {
        probe(t, &x[0].add(&x[1])?, 10)
    })?;
    s.check("sub", &[("a", a.clone()), ("b", b.clone())], |t, x| {
        probe(t, &x[0].sub(&x[1])?, 11)
    })?;
    s.check("mul", &[("a", a.clone()), ("b", b.clone())], |t, x| {
        probe(t, &x[0].mul(&x[1])?, 12)
    })?;
    s.check(
        "mul_complex",
        &[("a", complex(&[2, 5], 3)), ("b", complex(&[5], 4))],
        |t, x| probe(t, &x[0].mul(&x[1])?, 13),
    )?;
    s.check("scale", &[("a", a.clone())], |t, x| {
        probe(t, &x[0].scale(-2.5), 14)
    })?;
    s.check("tanh", &[("a", a.clone())], |t, x| {
        probe(t, &x[0].tanh()?, 15)
    })?;
    s.check("sigmoid", &[("a", a.clone())], |t, x| {
        probe(t, &x[0].sigmoid()?, 16)
    })?;
    s.check("gelu", &[("a", a.clone())], |t, x| {
        probe(t, &x[0].gelu()?, 17)
    })?;
    s.check("sqrt", &[("a", positive(&[2, 6], 5))], |t, x| {
        probe(t, &x[0].sqrt()?, 18)
    })?;
    s.check("recip", &[("a", positive(&[2, 6], 6))], |t, x| {
        probe(t, &x[0].recip()?, 19)
    })?;
    s.check("softmax", &[("a", a.clone())], |t, x| {
        probe(t, &x[0].softmax(1)?, 20)
    })?;
    s.check(
        "matmul",
        &[("a", real(&[2, 3, 4], 7)), ("b", real(&[4, 5], 8))],
        |t, x| probe(t, &x[0].matmul(&x[1])?, 21),
    )?;
    s.check("sum", &[("a", a.clone())], |t, x| {
        probe(t, &x[0].sum(&[0, 2])?, 22)
    })?;
    s.check("mean", &[("a", a.clone())], |t, x| {
        probe(t, &x[0].mean(&[1])?, 23)
    })?;
    s.check("sum_all", &[("a", a.clone())], |_, x| {
        x[0].tanh()?.sum_all()
    })?;
    s.check("mean_all", &[("a", a.clone())], |_, x| {
        x[0].sigmoid()?.mean_all()
    })?;
    s.check("reshape", &[("a", a.clone())], |t, x| {
        probe(t, &x[0].reshape(&[6, 4])?.tanh()?, 24)
    })?;
    s.check("gather", &[("a", a.clone())], |t, x| {
        probe(t, &x[0].gather(2, &[3, 0, 3])?, 25)
    })?;
    s.check("scatter", &[("a", a.clone())], |t, x| {
        probe(t, &x[0].scatter(2, &[1, 4, 6, 2], 7)?, 26)
    })?;
    s.check(
        "concat",
        &[("a", real(&[2, 3], 9)), ("b", real(&[2, 2], 10))],
        |t, x| probe(t, &t.concat(&[x[0], x[1]], 1)?, 27),
    )?;
    let z = complex(&[2, 8], 11);
    s.check("fft", &[("z", z.clone())], |t, x| {
        probe(t, &x[0].fft(1)?, 28)
    })?;
    s.check("ifft", &[("z", z.clone())], |t, x| {
        probe(t, &x[0].ifft(1)?, 29)
    })?;
    s.check("rfft", &[("a", real(&[2, 8], 12))], |t, x| {
        probe(t, &x[0].rfft()?, 30)
    })?;
    s.check("irfft", &[("z", complex(&[2, 5], 13))], |t, x| {
        probe(t, &x[0].irfft(8)?, 31)
    })?;
    s.check(
        "spectral_mix",
        &[
            ("v", complex(&[2, 3, 4], 14)),
            ("w", complex(&[3, 2, 4], 15)),
        ],
        |t, x| probe(t, &x[0].spectral_mix(&x[1])?, 32),
    )?;
    s.check("to_complex", &[("a", real(&[3, 4], 16))], |t, x| {
        probe(t, &x[0].to_complex()?, 33)
    })?;
    s.check("real_part", &[("z", complex(&[3, 4], 17))], |t, x| {
        probe(t, &x[0].real_part()?, 34)
    })?;
    Ok(())
}

fn layers_suite(s: &mut Suite) -> Checked<()> {
    let w = 3;
    s.check(
        "affine",
        &[
            ("v", real(&[2, 2, 8], 40)),
            ("w", real(&[w, 2], 41)),
            ("b", real(&[w], 42)),
        ],
        |t, x| probe(t, &core(affine(&x[0], &x[1], &x[2]))?, 43),
    )?;
    s.check(
        "spectral_conv_1d",
        &[("v", real(&[2, w, 16], 44)), ("r", complex(&[w, w, 5], 45))],
        |t, x| probe(t, &core(spectral_conv(&x[0], &x[1]))?, 46),
    )?;
    s.check(
        "spectral_conv_2d",
        &[
            ("v", real(&[1, 2, 8, 8], 47)),
            ("r", complex(&[2, 2, 3, 3], 48)),
        ],
        |t, x| probe(t, &core(spectral_conv(&x[0], &x[1]))?, 49),
    )?;
    s.check(
        "fourier_layer",
        &[
            ("v", real(&[2, w, 16], 50)),
            ("w", real(&[w, w], 51)),
            ("b", real(&[w], 52)),
            ("r", complex(&[w, w, 5], 53)),
        ],
        |t, x| {
            let y = core(fourier_layer(&x[0], &x[1], &x[2], &x[3], Activation::Gelu))?;
            probe(t, &y, 54)
        },
    )?;
    s.check(
        "fourier_layer_2d_tanh",
        &[
            ("v", real(&[1, 2, 8, 8], 55)),
            ("w", real(&[2, 2], 56)),
            ("b", real(&[2], 57)),
            ("r", complex(&[2, 2, 3, 3], 58)),
        ],
        |t, x| {
            let y = core(fourier_layer(&x[0], &x[1], &x[2], &x[3], Activation::Tanh))?;
            probe(t, &y, 59)
        },
    )?;
    s.check(
        "lift",
        &[
            ("f", real(&[2, 1, 8], 60)),
            ("w", real(&[4, 2], 61)),
            ("b", real(&[4], 62)),
        ],
        |t, x| probe(t, &core(lift(t, &x[0], true, &x[1], &x[2]))?, 63),
    )?;
    s.check(
        "project",
        &[
            ("v", real(&[2, w, 8], 64)),
            ("w1", real(&[5, w], 65)),
            ("b1", real(&[5], 66)),
            ("w2", real(&[1, 5], 67)),
            ("b2", real(&[1], 68)),
        ],
        |t, x| probe(t, &core(project(&x[0], &x[1], &x[2], &x[3], &x[4]))?, 69),
    )?;
    Ok(())
}

fn aggregation_suite(s: &mut Suite) -> Checked<()> {
    let (w, cells) = (4, 8);
    let field = |seed| real(&[2, w, cells], seed);
    s.check(
        "mix_linear",
        &[
            ("v0", field(70)),
            ("v1", field(71)),
            ("w", real(&[w, 2 * w], 72)),
            ("b", real(&[w], 73)),
        ],
        |t, x| {
            let y = core(mix_processes(
                t,
                &x[..2],
                MixKind::Linear,
                Some((x[2], x[3])),
            ))?;
            probe(t, &y, 74)
        },
    )?;
    s.check(
        "mix_add",
        &[("v0", field(75)), ("v1", field(76))],
        |t, x| probe(t, &core(mix_processes(t, &x[..2], MixKind::Add, None))?, 77),
    )?;
    let mut gru: Vec<(&str, Tensor<f64>)> = vec![("mixed", field(80)), ("z_prev", field(81))];
    for (i, name) in ["wq", "wr", "wz", "uq", "ur", "uz"].into_iter().enumerate() {
        gru.push((name, real(&[w, w], 82 + i as u64)));
    }
    for (i, name) in ["bq", "br", "bz"].into_iter().enumerate() {
        gru.push((name, real(&[w], 90 + i as u64)));
    }
    s.check("gru_step", &gru, |t, x| {
        let p = GruVars {
            wq: x[2],
            wr: x[3],
            wz: x[4],
            uq: x[5],
            ur: x[6],
            uz: x[7],
            bq: x[8],
            br: x[9],
            bz: x[10],
        };
        probe(t, &core(gru_step(&x[0], &x[1], &p))?, 93)
    })?;
    for (heads, dk, seed) in [(1, w, 100), (2, 6, 110)] {
        let inputs = [
            ("v0", field(seed)),
            ("v1", field(seed + 1)),
            ("v2", field(seed + 2)),
            ("q.w", real(&[dk, w], seed + 3)),
            ("q.b", real(&[dk], seed + 4)),
            ("k.w", real(&[dk, w], seed + 5)),
            ("a.w", real(&[w, w], seed + 6)),
            ("a.b", real(&[w], seed + 7)),
        ];
        s.check(&format!("attention_{heads}h"), &inputs, move |t, x| {
            let p = AttnVars {
                q: (x[3], x[4]),
                k: x[5],
                a: (x[6], x[7]),
                heads,
            };
            probe(t, &core(attention_aggregate(t, &x[..3], &p))?.z, seed + 8)
        })?;
    }
    s.check(
        "skip",
        &[
            ("mixed", field(120)),
            ("z_prev", field(121)),
            ("w", real(&[w, w], 122)),
            ("b", real(&[w], 123)),
        ],
        |t, x| probe(t, &core(skip_aggregate(&x[0], &x[1], &x[2], &x[3]))?, 124),
    )?;
    s.check(
        "inject_add",
        &[("v", field(125)), ("z", field(126))],
        |t, x| {
            probe(
                t,
                &core(inject(t, &x[0], &x[1], InjectKind::Add, None))?,
                127,
            )
        },
    )?;
    s.check(
        "inject_concat_reduce",
        &[
            ("v", field(128)),
            ("z", field(129)),
            ("w", real(&[w, 2 * w], 130)),
            ("b", real(&[w], 131)),
        ],
        |t, x| {
            let y = core(inject(
                t,
                &x[0],
                &x[1],
                InjectKind::ConcatReduce,
                Some((x[2], x[3])),
            ))?;
            probe(t, &y, 132)
        },
    )?;
    Ok(())
}

/// The model configurations checked end to end: width 8, 4 modes, 2 layers, 2 processes.
pub fn model_variants() -> Vec<(&'static str, CompolConfig)> {
    let base = CompolConfig {
        channels: vec![1, 1],
        layers: 2,
        width: 8,
        modes: vec![4],
        head_width: 16,
        seed: 3,
        ..CompolConfig::default()
    };
    let with = |aggregation| CompolConfig {
        aggregation,
        ..base.clone()
    };
    vec![
        ("compol_atn", with(Aggregation::Attention)),
        ("compol_rnn", with(Aggregation::Gru)),
        ("compol_skip", with(Aggregation::Skip)),
        (
            "fno_c",
            CompolConfig {
                architecture: Architecture::FnoConcat,
                ..with(Aggregation::None)
            },
        ),
    ]
}

fn model_suite(s: &mut Suite) -> Checked<()> {
    let n = 32;
    for (name, cfg) in model_variants() {
        let model = CompolModel::<f64>::new(cfg).map_err(|e| TensorError::Shape(e.to_string()))?;
        let names: Vec<String> = model.params().names().map(String::from).collect();
        let inputs: Vec<(&str, Tensor<f64>)> = names
            .iter()
            .map(|p| (p.as_str(), model.params().get(p).expect("listed").clone()))
            .collect();
        let xs = [real(&[2, 1, n], 140), real(&[2, 1, n], 141)];
        s.check(name, &inputs, |t, vars| {
            let bound = Bound::from_vars(names.iter().cloned().zip(vars.iter().copied()));
            let x: Vec<_> = xs.iter().map(|v| t.constant(v.clone())).collect();
            let out = core(model.forward(t, &bound, &x))?;
            let mut loss = probe(t, &out[0], 142)?;
            for (m, o) in out.iter().enumerate().skip(1) {
                loss = loss.add(&probe(t, o, 142 + m as u64)?)?;
            }
            Ok(loss)
        })?;
    }
    Ok(())
}

/// Runs the suites of `modules` in order.
pub fn run(modules: &[Module]) -> Checked<Vec<CaseResult>> {
    let mut out = Vec::new();
    for &module in modules {
        let mut suite = Suite {
            module,
            results: Vec::new(),
        };
        match module {
            Module::Tensor => tensor_suite(&mut suite)?,
            Module::Layers => layers_suite(&mut suite)?,
            Module::Aggregation => aggregation_suite(&mut suite)?,
            Module::Model => model_suite(&mut suite)?,
        }
        out.extend(suite.results);
    }
    Ok(out)
}
