//! Cross-process coupling: mixing, aggregation state updates and re-injection.
//!
//! All maps act pointwise per grid location with weights shared across space.

use compol_tensor::{Real, Tape, Var};

use crate::config::{InjectKind, MixKind};
use crate::error::{CoreError, Result};
use crate::layers::affine;

fn check_uniform<T: Real>(fields: &[Var<'_, T>]) -> Result<Vec<usize>> {
    let first = fields
        .first()
        .ok_or_else(|| CoreError::Config("at least one process latent is required".into()))?
        .shape();
    for f in &fields[1..] {
        if f.shape() != first {
            return Err(CoreError::Config(format!(
                "process latents differ in shape: {first:?} vs {:?}",
                f.shape()
            )));
        }
    }
    Ok(first)
}

/// Summarizes the M process latents into one field.
///
/// `linear` concatenates channels and applies `(w, b)`; `add` sums the fields.
pub fn mix_processes<'t, T: Real>(
    tape: &'t Tape<T>,
    latents: &[Var<'t, T>],
    kind: MixKind,
    linear: Option<(Var<'t, T>, Var<'t, T>)>,
) -> Result<Var<'t, T>> {
    check_uniform(latents)?;
    match kind {
        MixKind::Add => {
            let mut acc = latents[0];
            for v in &latents[1..] {
                acc = acc.add(v)?;
            }
            Ok(acc)
        }
        MixKind::Linear => {
            let (w, b) =
                linear.ok_or_else(|| CoreError::Config("linear mixing needs a weight".into()))?;
            affine(&tape.concat(latents, 1)?, &w, &b)
        }
    }
}

/// Gate weights of one GRU update. `w*` act on the mixed field, `u*` on the state.
#[derive(Debug, Clone, Copy)]
pub struct GruVars<'t, T: Real> {
    pub wq: Var<'t, T>,
    pub wr: Var<'t, T>,
    pub wz: Var<'t, T>,
    pub uq: Var<'t, T>,
    pub ur: Var<'t, T>,
    pub uz: Var<'t, T>,
    pub bq: Var<'t, T>,
    pub br: Var<'t, T>,
    pub bz: Var<'t, T>,
}

fn linear<'t, T: Real>(v: &Var<'t, T>, w: &Var<'t, T>) -> Result<Var<'t, T>> {
    let shape = v.shape();
    let ws = w.shape();
    let grid: usize = shape[2..].iter().product();
    let y = w.matmul(&v.reshape(&[shape[0], shape[1], grid])?)?;
    let mut out = shape;
    out[1] = ws[0];
    Ok(y.reshape(&out)?)
}

/// `q = s(Wq x + Uq z + bq)`, `r = s(Wr x + Ur z + br)`,
/// `z~ = tanh(Wz x + Uz (r * z) + bz)`, `z' = q * z + (1 - q) * z~`.
pub fn gru_step<'t, T: Real>(
    mixed: &Var<'t, T>,
    z_prev: &Var<'t, T>,
    p: &GruVars<'t, T>,
) -> Result<Var<'t, T>> {
    let q = affine(mixed, &p.wq, &p.bq)?
        .add(&linear(z_prev, &p.uq)?)?
        .sigmoid()?;
    let r = affine(mixed, &p.wr, &p.br)?
        .add(&linear(z_prev, &p.ur)?)?
        .sigmoid()?;
    let cand = affine(mixed, &p.wz, &p.bz)?
        .add(&linear(&r.mul(z_prev)?, &p.uz)?)?
        .tanh()?;
    // q z + (1 - q) z~ = z~ + q (z - z~)
    Ok(cand.add(&q.mul(&z_prev.sub(&cand)?)?)?)
}

/// Affine `Phi_Q` (`d_h -> d_k`), `Phi_A` (`d_h -> d_h`) and bias-free `Phi_K` (`d_h -> d_k`).
#[derive(Debug, Clone, Copy)]
pub struct AttnVars<'t, T: Real> {
    pub q: (Var<'t, T>, Var<'t, T>),
    pub k: Var<'t, T>,
    pub a: (Var<'t, T>, Var<'t, T>),
    pub heads: usize,
}

/// Output of [`attention_aggregate`].
pub struct Attended<'t, T: Real> {
    pub z: Var<'t, T>,
    /// Softmax weights `[batch, heads, tokens, grid cells]`.
    pub alpha: Var<'t, T>,
}

/// Scaled dot-product attention over process tokens at every grid location.
///
/// The query is `Phi_Q` of the token mean; `z = sum_j alpha_j Phi_A(v_j)`.
pub fn attention_aggregate<'t, T: Real>(
    tape: &'t Tape<T>,
    tokens: &[Var<'t, T>],
    p: &AttnVars<'t, T>,
) -> Result<Attended<'t, T>> {
    let shape = check_uniform(tokens)?;
    let (batch, width) = (shape[0], shape[1]);
    let cells: usize = shape[2..].iter().product();
    let dk = p.k.shape()[0];
    let dv = p.a.0.shape()[0];
    let h = p.heads;
    if h == 0 || dk % h != 0 || dv % h != 0 {
        return Err(CoreError::Config(format!(
            "{h} heads must divide key width {dk} and value width {dv}"
        )));
    }
    let flat: Vec<Var<'t, T>> = tokens
        .iter()
        .map(|t| t.reshape(&[batch, width, cells]))
        .collect::<std::result::Result<_, _>>()?;
    let mut mean = flat[0];
    for t in &flat[1..] {
        mean = mean.add(t)?;
    }
    let mean = mean.scale(T::one() / T::of(flat.len() as f64));
    let query = affine(&mean, &p.q.0, &p.q.1)?.reshape(&[batch, h, dk / h, cells])?;
    let inv_sqrt = T::one() / T::of((dk / h) as f64).sqrt();
    let mut scores = Vec::with_capacity(flat.len());
    for t in &flat {
        let key = linear(t, &p.k)?.reshape(&[batch, h, dk / h, cells])?;
        let s = query.mul(&key)?.sum(&[2])?.scale(inv_sqrt);
        scores.push(s.reshape(&[batch, h, 1, cells])?);
    }
    let alpha = tape.concat(&scores, 2)?.softmax(2)?;
    let mut z: Option<Var<'t, T>> = None;
    for (j, t) in flat.iter().enumerate() {
        let value = affine(t, &p.a.0, &p.a.1)?.reshape(&[batch, h, dv / h, cells])?;
        let term = alpha.gather(2, &[j])?.mul(&value)?;
        z = Some(match z {
            Some(acc) => acc.add(&term)?,
            None => term,
        });
    }
    let mut out = shape;
    out[1] = dv;
    let z = z.expect("at least one token").reshape(&out)?;
    Ok(Attended { z, alpha })
}

/// `z' = z + W mixed + b`.
pub fn skip_aggregate<'t, T: Real>(
    mixed: &Var<'t, T>,
    z_prev: &Var<'t, T>,
    w: &Var<'t, T>,
    b: &Var<'t, T>,
) -> Result<Var<'t, T>> {
    Ok(z_prev.add(&affine(mixed, w, b)?)?)
}

/// Re-injects the aggregation state into one process latent.
pub fn inject<'t, T: Real>(
    tape: &'t Tape<T>,
    v: &Var<'t, T>,
    z: &Var<'t, T>,
    kind: InjectKind,
    reduce: Option<(Var<'t, T>, Var<'t, T>)>,
) -> Result<Var<'t, T>> {
    if v.shape() != z.shape() {
        return Err(CoreError::Config(format!(
            "cannot inject state {:?} into latent {:?}",
            z.shape(),
            v.shape()
        )));
    }
    match kind {
        InjectKind::Add => Ok(v.add(z)?),
        InjectKind::ConcatReduce => {
            let (w, b) =
                reduce.ok_or_else(|| CoreError::Config("concat_reduce needs a weight".into()))?;
            affine(&tape.concat(&[*v, *z], 1)?, &w, &b)
        }
    }
}
