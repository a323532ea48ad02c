//! Central finite-difference checks of tape gradients.

use crate::error::{Result, TensorError};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Outcome of a gradient check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Number of scalar components compared.
    pub components: usize,
    /// `(input, scalar index)` of the largest relative error; complex inputs count
    /// interleaved real and imaginary parts.
    pub worst: (usize, usize),
}

fn relative(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-12)
}

fn evaluate<F>(f: &F, inputs: &[Tensor<f64>]) -> Result<f64>
where
    F: for<'t> Fn(&'t Tape<f64>, &[Var<'t, f64>]) -> Result<Var<'t, f64>>,
{
    let tape = Tape::new();
    let vars: Vec<_> = inputs.iter().map(|x| tape.constant(x.clone())).collect();
    let y = f(&tape, &vars)?.value();
    let y = y.item()?;
    if !y.is_finite() {
        return Err(TensorError::NonFinite(format!("function value {y}")));
    }
    Ok(y)
}

/// Compares the tape gradient of a scalar `f` against central differences on every
/// scalar of every input (complex inputs are perturbed in each part separately).
pub fn finite_diff_check_many<F>(f: F, inputs: &[Tensor<f64>], eps: f64) -> Result<GradCheck>
where
    F: for<'t> Fn(&'t Tape<f64>, &[Var<'t, f64>]) -> Result<Var<'t, f64>>,
{
    let tape = Tape::new();
    let vars: Vec<_> = inputs.iter().map(|x| tape.var(x.clone())).collect();
    let loss = f(&tape, &vars)?;
    if !loss.value().all_finite() {
        return Err(TensorError::NonFinite("function value".into()));
    }
    let grads = tape.backward(&loss)?;
    let mut report = GradCheck {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        components: 0,
        worst: (0, 0),
    };
    for (i, x) in inputs.iter().enumerate() {
        let analytic = grads.get(&vars[i])?;
        for j in 0..x.data().len() {
            let mut shifted = inputs.to_vec();
            let mut plus = x.to_vec();
            plus[j] += eps;
            shifted[i] = rebuild(x, plus);
            let fp = evaluate(&f, &shifted)?;
            let mut minus = x.to_vec();
            minus[j] -= eps;
            shifted[i] = rebuild(x, minus);
            let fm = evaluate(&f, &shifted)?;
            let numeric = (fp - fm) / (2.0 * eps);
            let a = analytic.data()[j];
            let rel = relative(a, numeric);
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = (i, j);
            }
            report.max_abs_error = report.max_abs_error.max((a - numeric).abs());
            report.components += 1;
        }
    }
    Ok(report)
}

/// Single-input form of [`finite_diff_check_many`], returning the max relative error.
pub fn finite_diff_check<F>(f: F, x: &Tensor<f64>, eps: f64) -> Result<f64>
where
    F: for<'t> Fn(&'t Tape<f64>, Var<'t, f64>) -> Result<Var<'t, f64>>,
{
    let report =
        finite_diff_check_many(|tape, vars| f(tape, vars[0]), std::slice::from_ref(x), eps)?;
    Ok(report.max_rel_error)
}

fn rebuild(like: &Tensor<f64>, data: Vec<f64>) -> Tensor<f64> {
    if like.is_complex() {
        Tensor::new_complex(like.shape(), data).expect("same length")
    } else {
        Tensor::new(like.shape(), data).expect("same length")
    }
}
