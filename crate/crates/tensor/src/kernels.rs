//! Numeric kernels shared by the forward and backward passes.

use num_complex::Complex;

use crate::error::{Result, TensorError};
use crate::fft;
use crate::real::Real;
use crate::tensor::numel;

pub(crate) fn broadcast_shape(a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i + a.len() >= rank {
            a[i + a.len() - rank]
        } else {
            1
        };
        let db = if i + b.len() >= rank {
            b[i + b.len() - rank]
        } else {
            1
        };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => {
                return Err(TensorError::Broadcast {
                    lhs: a.to_vec(),
                    rhs: b.to_vec(),
                })
            }
        };
    }
    Ok(out)
}

/// Element strides of `shape` viewed inside `out` (zero along broadcast axes).
pub(crate) fn aligned_strides(shape: &[usize], out: &[usize]) -> Vec<usize> {
    let offset = out.len() - shape.len();
    let mut strides = vec![0; out.len()];
    let mut acc = 1;
    for i in (0..shape.len()).rev() {
        if shape[i] != 1 {
            strides[i + offset] = acc;
        }
        acc *= shape[i];
    }
    strides
}

/// Walks `shape` in row-major order, yielding the linear index together with
/// offsets under two stride sets.
pub(crate) fn for_each2(
    shape: &[usize],
    sa: &[usize],
    sb: &[usize],
    mut f: impl FnMut(usize, usize, usize),
) {
    let rank = shape.len();
    if rank == 0 {
        f(0, 0, 0);
        return;
    }
    if shape.contains(&0) {
        return;
    }
    let last = shape[rank - 1];
    let (la, lb) = (sa[rank - 1], sb[rank - 1]);
    let outer = numel(&shape[..rank - 1]);
    let mut idx = vec![0usize; rank - 1];
    let (mut oa, mut ob) = (0usize, 0usize);
    for o in 0..outer {
        let base = o * last;
        for j in 0..last {
            f(base + j, oa + j * la, ob + j * lb);
        }
        for d in (0..rank - 1).rev() {
            idx[d] += 1;
            oa += sa[d];
            ob += sb[d];
            if idx[d] < shape[d] {
                break;
            }
            oa -= sa[d] * shape[d];
            ob -= sb[d] * shape[d];
            idx[d] = 0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryKind {
    Add,
    Sub,
    Mul,
}

pub(crate) fn binary_forward<T: Real>(
    kind: BinaryKind,
    a: &[T],
    a_shape: &[usize],
    b: &[T],
    b_shape: &[usize],
    complex: bool,
) -> Result<(Vec<usize>, Vec<T>)> {
    let out_shape = broadcast_shape(a_shape, b_shape)?;
    let n = numel(&out_shape);
    let width = if complex { 2 } else { 1 };
    let mut out = vec![T::zero(); n * width];
    let sa = aligned_strides(a_shape, &out_shape);
    let sb = aligned_strides(b_shape, &out_shape);
    if !complex {
        if a_shape == b_shape {
            for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
                *o = match kind {
                    BinaryKind::Add => x + y,
                    BinaryKind::Sub => x - y,
                    BinaryKind::Mul => x * y,
                };
            }
        } else {
            for_each2(&out_shape, &sa, &sb, |o, ia, ib| {
                out[o] = match kind {
                    BinaryKind::Add => a[ia] + b[ib],
                    BinaryKind::Sub => a[ia] - b[ib],
                    BinaryKind::Mul => a[ia] * b[ib],
                };
            });
        }
    } else {
        for_each2(&out_shape, &sa, &sb, |o, ia, ib| {
            let x = Complex::new(a[2 * ia], a[2 * ia + 1]);
            let y = Complex::new(b[2 * ib], b[2 * ib + 1]);
            let z = match kind {
                BinaryKind::Add => x + y,
                BinaryKind::Sub => x - y,
                BinaryKind::Mul => x * y,
            };
            out[2 * o] = z.re;
            out[2 * o + 1] = z.im;
        });
    }
    Ok((out_shape, out))
}

/// Gradients of a broadcast binary op with respect to both operands.
#[allow(clippy::too_many_arguments)]
pub(crate) fn binary_backward<T: Real>(
    kind: BinaryKind,
    g: &[T],
    out_shape: &[usize],
    a: &[T],
    a_shape: &[usize],
    b: &[T],
    b_shape: &[usize],
    complex: bool,
) -> (Vec<T>, Vec<T>) {
    let width = if complex { 2 } else { 1 };
    let mut ga = vec![T::zero(); numel(a_shape) * width];
    let mut gb = vec![T::zero(); numel(b_shape) * width];
    let sa = aligned_strides(a_shape, out_shape);
    let sb = aligned_strides(b_shape, out_shape);
    if !complex {
        for_each2(out_shape, &sa, &sb, |o, ia, ib| {
            let go = g[o];
            match kind {
                BinaryKind::Add => {
                    ga[ia] += go;
                    gb[ib] += go;
                }
                BinaryKind::Sub => {
                    ga[ia] += go;
                    gb[ib] -= go;
                }
                BinaryKind::Mul => {
                    ga[ia] += go * b[ib];
                    gb[ib] += go * a[ia];
                }
            }
        });
    } else {
        for_each2(out_shape, &sa, &sb, |o, ia, ib| {
            let go = Complex::new(g[2 * o], g[2 * o + 1]);
            let (da, db) = match kind {
                BinaryKind::Add => (go, go),
                BinaryKind::Sub => (go, -go),
                BinaryKind::Mul => {
                    let x = Complex::new(a[2 * ia], a[2 * ia + 1]);
                    let y = Complex::new(b[2 * ib], b[2 * ib + 1]);
                    (go * y.conj(), go * x.conj())
                }
            };
            ga[2 * ia] += da.re;
            ga[2 * ia + 1] += da.im;
            gb[2 * ib] += db.re;
            gb[2 * ib + 1] += db.im;
        });
    }
    (ga, gb)
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_K: f64 = 0.044_715;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryKind {
    Tanh,
    Sigmoid,
    Gelu,
    Sqrt,
}

#[inline]
fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub(crate) fn unary_forward<T: Real>(kind: UnaryKind, a: &[T]) -> Vec<T> {
    match kind {
        UnaryKind::Tanh => a.iter().map(|x| x.tanh()).collect(),
        UnaryKind::Sigmoid => a.iter().map(|&x| sigmoid(x)).collect(),
        UnaryKind::Sqrt => a.iter().map(|x| x.sqrt()).collect(),
        UnaryKind::Gelu => {
            let (c, k, half) = (T::of(GELU_C), T::of(GELU_K), T::of(0.5));
            a.iter()
                .map(|&x| half * x * (T::one() + (c * (x + k * x * x * x)).tanh()))
                .collect()
        }
    }
}

/// Input gradient given the input `a`, the forward output `y` and the upstream gradient `g`.
pub(crate) fn unary_backward<T: Real>(kind: UnaryKind, a: &[T], y: &[T], g: &[T]) -> Vec<T> {
    match kind {
        UnaryKind::Tanh => y
            .iter()
            .zip(g)
            .map(|(&t, &g)| g * (T::one() - t * t))
            .collect(),
        UnaryKind::Sigmoid => y
            .iter()
            .zip(g)
            .map(|(&s, &g)| g * s * (T::one() - s))
            .collect(),
        UnaryKind::Sqrt => y
            .iter()
            .zip(g)
            .map(|(&r, &g)| g / (T::of(2.0) * r))
            .collect(),
        UnaryKind::Gelu => {
            let (c, k, half) = (T::of(GELU_C), T::of(GELU_K), T::of(0.5));
            let three_k = T::of(3.0 * GELU_K);
            a.iter()
                .zip(g)
                .map(|(&x, &g)| {
                    let t = (c * (x + k * x * x * x)).tanh();
                    let dinner = c * (T::one() + three_k * x * x);
                    g * (half * (T::one() + t) + half * x * (T::one() - t * t) * dinner)
                })
                .collect()
        }
    }
}

/// `[outer, n, inner]` view of `shape` around `axis`.
pub(crate) fn split_at_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    (
        numel(&shape[..axis]),
        shape[axis],
        numel(&shape[axis + 1..]),
    )
}

pub(crate) fn softmax_forward<T: Real>(a: &[T], shape: &[usize], axis: usize) -> Vec<T> {
    let (outer, n, inner) = split_at_axis(shape, axis);
    let mut out = vec![T::zero(); a.len()];
    for o in 0..outer {
        for i in 0..inner {
            let at = |j: usize| (o * n + j) * inner + i;
            let max = (0..n).map(|j| a[at(j)]).fold(T::neg_infinity(), T::max);
            let mut total = T::zero();
            for j in 0..n {
                let e = (a[at(j)] - max).exp();
                out[at(j)] = e;
                total += e;
            }
            for j in 0..n {
                out[at(j)] = out[at(j)] / total;
            }
        }
    }
    out
}

pub(crate) fn softmax_backward<T: Real>(y: &[T], g: &[T], shape: &[usize], axis: usize) -> Vec<T> {
    let (outer, n, inner) = split_at_axis(shape, axis);
    let mut out = vec![T::zero(); y.len()];
    for o in 0..outer {
        for i in 0..inner {
            let at = |j: usize| (o * n + j) * inner + i;
            let dot: T = (0..n).map(|j| g[at(j)] * y[at(j)]).sum();
            for j in 0..n {
                out[at(j)] = y[at(j)] * (g[at(j)] - dot);
            }
        }
    }
    out
}

/// Shape left after removing `axes`.
pub(crate) fn reduced_shape(shape: &[usize], axes: &[usize]) -> Vec<usize> {
    shape
        .iter()
        .enumerate()
        .filter(|(i, _)| !axes.contains(i))
        .map(|(_, &d)| d)
        .collect()
}

/// Strides of the reduced tensor laid over the full shape (zero on reduced axes).
fn reduce_strides(shape: &[usize], axes: &[usize]) -> Vec<usize> {
    let mut strides = vec![0; shape.len()];
    let mut acc = 1;
    for i in (0..shape.len()).rev() {
        if !axes.contains(&i) {
            strides[i] = acc;
            acc *= shape[i];
        }
    }
    strides
}

pub(crate) fn sum_forward<T: Real>(
    a: &[T],
    shape: &[usize],
    axes: &[usize],
    complex: bool,
) -> Vec<T> {
    let out_len = numel(&reduced_shape(shape, axes));
    let so = reduce_strides(shape, axes);
    let zero = vec![0; shape.len()];
    if complex {
        let mut out = vec![T::zero(); 2 * out_len];
        for_each2(shape, &so, &zero, |i, o, _| {
            out[2 * o] += a[2 * i];
            out[2 * o + 1] += a[2 * i + 1];
        });
        out
    } else {
        let mut out = vec![T::zero(); out_len];
        for_each2(shape, &so, &zero, |i, o, _| out[o] += a[i]);
        out
    }
}

/// Broadcasts a reduced gradient back over the full shape, scaled by `scale`.
pub(crate) fn sum_backward<T: Real>(
    g: &[T],
    shape: &[usize],
    axes: &[usize],
    complex: bool,
    scale: T,
) -> Vec<T> {
    let so = reduce_strides(shape, axes);
    let zero = vec![0; shape.len()];
    let width = if complex { 2 } else { 1 };
    let mut out = vec![T::zero(); numel(shape) * width];
    for_each2(shape, &so, &zero, |i, o, _| {
        for c in 0..width {
            out[width * i + c] = g[width * o + c] * scale;
        }
    });
    out
}

/// Batched matmul `[..., m, k] x [..., k, n]` with broadcast batch axes.
pub(crate) struct MatmulDims {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub out_shape: Vec<usize>,
    batch_shape: Vec<usize>,
    sa: Vec<usize>,
    sb: Vec<usize>,
}

pub(crate) fn matmul_dims(a: &[usize], b: &[usize]) -> Result<MatmulDims> {
    if a.len() < 2 || b.len() < 2 {
        return Err(TensorError::Shape(format!(
            "matmul needs rank >= 2 operands, got {a:?} and {b:?}"
        )));
    }
    let (m, k) = (a[a.len() - 2], a[a.len() - 1]);
    let (k2, n) = (b[b.len() - 2], b[b.len() - 1]);
    if k != k2 {
        return Err(TensorError::InnerDim {
            lhs: a.to_vec(),
            rhs: b.to_vec(),
        });
    }
    let ba = &a[..a.len() - 2];
    let bb = &b[..b.len() - 2];
    let batch_shape = broadcast_shape(ba, bb)?;
    let sa = aligned_strides(ba, &batch_shape);
    let sb = aligned_strides(bb, &batch_shape);
    let mut out_shape = batch_shape.clone();
    out_shape.extend([m, n]);
    Ok(MatmulDims {
        m,
        k,
        n,
        out_shape,
        batch_shape,
        sa,
        sb,
    })
}

impl MatmulDims {
    fn for_each_batch(&self, mut f: impl FnMut(usize, usize, usize)) {
        for_each2(&self.batch_shape, &self.sa, &self.sb, |o, ia, ib| {
            f(o, ia, ib)
        });
    }
}

pub(crate) fn matmul_forward<T: Real>(d: &MatmulDims, a: &[T], b: &[T]) -> Vec<T> {
    let (m, k, n) = (d.m, d.k, d.n);
    let mut out = vec![T::zero(); numel(&d.out_shape)];
    d.for_each_batch(|o, ia, ib| {
        T::gemm(
            m,
            k,
            n,
            &a[ia * m * k..(ia + 1) * m * k],
            (k as isize, 1),
            &b[ib * k * n..(ib + 1) * k * n],
            (n as isize, 1),
            T::zero(),
            &mut out[o * m * n..(o + 1) * m * n],
            (n as isize, 1),
        );
    });
    out
}

pub(crate) fn matmul_backward<T: Real>(
    d: &MatmulDims,
    a: &[T],
    b: &[T],
    g: &[T],
) -> (Vec<T>, Vec<T>) {
    let (m, k, n) = (d.m, d.k, d.n);
    let mut ga = vec![T::zero(); a.len()];
    let mut gb = vec![T::zero(); b.len()];
    d.for_each_batch(|o, ia, ib| {
        let go = &g[o * m * n..(o + 1) * m * n];
        // dA = dC . B^T
        T::gemm(
            m,
            n,
            k,
            go,
            (n as isize, 1),
            &b[ib * k * n..(ib + 1) * k * n],
            (1, n as isize),
            T::one(),
            &mut ga[ia * m * k..(ia + 1) * m * k],
            (k as isize, 1),
        );
        // dB = A^T . dC
        T::gemm(
            k,
            m,
            n,
            &a[ia * m * k..(ia + 1) * m * k],
            (1, k as isize),
            go,
            (n as isize, 1),
            T::one(),
            &mut gb[ib * k * n..(ib + 1) * k * n],
            (n as isize, 1),
        );
    });
    (ga, gb)
}

/// Selects `indices` along `axis`; `width` is 2 for complex storage.
pub(crate) fn gather<T: Real>(
    a: &[T],
    shape: &[usize],
    axis: usize,
    indices: &[usize],
    width: usize,
) -> Vec<T> {
    let (outer, n, inner) = split_at_axis(shape, axis);
    let inner = inner * width;
    let mut out = Vec::with_capacity(outer * indices.len() * inner);
    for o in 0..outer {
        for &j in indices {
            let src = (o * n + j) * inner;
            out.extend_from_slice(&a[src..src + inner]);
        }
    }
    out
}

/// Adjoint of [`gather`]: scatters (accumulating) into a zero tensor of extent `len` along `axis`.
pub(crate) fn scatter<T: Real>(
    a: &[T],
    shape: &[usize],
    axis: usize,
    indices: &[usize],
    len: usize,
    width: usize,
) -> Vec<T> {
    let (outer, k, inner) = split_at_axis(shape, axis);
    let inner = inner * width;
    let mut out = vec![T::zero(); outer * len * inner];
    for o in 0..outer {
        for (j, &dst) in indices.iter().enumerate().take(k) {
            let src = (o * k + j) * inner;
            let dst = (o * len + dst) * inner;
            for c in 0..inner {
                out[dst + c] += a[src + c];
            }
        }
    }
    out
}

pub(crate) fn fft_axis<T: Real>(
    a: &[T],
    shape: &[usize],
    axis: usize,
    inverse: bool,
) -> Result<Vec<T>> {
    let (outer, n, inner) = split_at_axis(shape, axis);
    fft::check_length(n)?;
    let mut out = vec![T::zero(); a.len()];
    let mut line = vec![Complex::new(T::zero(), T::zero()); n];
    for o in 0..outer {
        for i in 0..inner {
            for (j, c) in line.iter_mut().enumerate() {
                let at = 2 * ((o * n + j) * inner + i);
                *c = Complex::new(a[at], a[at + 1]);
            }
            if inverse {
                fft::ifft(&mut line)?;
            } else {
                fft::fft(&mut line)?;
            }
            for (j, c) in line.iter().enumerate() {
                let at = 2 * ((o * n + j) * inner + i);
                out[at] = c.re;
                out[at + 1] = c.im;
            }
        }
    }
    Ok(out)
}

/// Real-input transform along the last axis (`n -> n/2 + 1` complex bins).
pub(crate) fn rfft_last<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    fft::check_length(n)?;
    let rows = a.len() / n;
    let bins = n / 2 + 1;
    let mut out = Vec::with_capacity(rows * bins * 2);
    let mut line = vec![Complex::new(T::zero(), T::zero()); n];
    for r in 0..rows {
        for (c, &x) in line.iter_mut().zip(&a[r * n..(r + 1) * n]) {
            *c = Complex::new(x, T::zero());
        }
        fft::fft(&mut line)?;
        for c in &line[..bins] {
            out.push(c.re);
            out.push(c.im);
        }
    }
    Ok(out)
}

/// Gradient of [`rfft_last`]: real part of the unnormalized inverse of the zero-extended half spectrum.
pub(crate) fn rfft_last_backward<T: Real>(g: &[T], n: usize) -> Result<Vec<T>> {
    let bins = n / 2 + 1;
    let rows = g.len() / (2 * bins);
    let mut out = Vec::with_capacity(rows * n);
    let mut line = vec![Complex::new(T::zero(), T::zero()); n];
    let scale = T::of(n as f64);
    for r in 0..rows {
        line.iter_mut()
            .for_each(|c| *c = Complex::new(T::zero(), T::zero()));
        for k in 0..bins {
            let at = 2 * (r * bins + k);
            line[k] = Complex::new(g[at], g[at + 1]);
        }
        fft::ifft(&mut line)?;
        out.extend(line.iter().map(|c| c.re * scale));
    }
    Ok(out)
}

pub(crate) fn irfft_last<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    fft::check_length(n)?;
    let bins = n / 2 + 1;
    let rows = a.len() / (2 * bins);
    let mut out = Vec::with_capacity(rows * n);
    let mut half = vec![Complex::new(T::zero(), T::zero()); bins];
    for r in 0..rows {
        for (k, c) in half.iter_mut().enumerate() {
            let at = 2 * (r * bins + k);
            *c = Complex::new(a[at], a[at + 1]);
        }
        out.extend(fft::irfft(&half, n)?);
    }
    Ok(out)
}

/// Gradient of [`irfft_last`]: `c_k / n * rfft(g)_k`, with `c_k = 1` at DC and Nyquist, 2 elsewhere.
pub(crate) fn irfft_last_backward<T: Real>(g: &[T], n: usize) -> Result<Vec<T>> {
    let bins = n / 2 + 1;
    let mut out = rfft_last(g, n)?;
    let inv_n = T::one() / T::of(n as f64);
    for chunk in out.chunks_mut(2 * bins) {
        for k in 0..bins {
            let c = if k == 0 || 2 * k == n {
                inv_n
            } else {
                T::of(2.0) * inv_n
            };
            chunk[2 * k] *= c;
            chunk[2 * k + 1] *= c;
        }
    }
    Ok(out)
}

/// Per-mode channel mixing `out[b,o,k] = sum_i x[b,i,k] * r[i,o,k]` on complex storage.
pub(crate) fn spectral_mix<T: Real>(
    x: &[T],
    r: &[T],
    batch: usize,
    cin: usize,
    cout: usize,
    modes: usize,
) -> Vec<T> {
    let mut out = vec![T::zero(); 2 * batch * cout * modes];
    for b in 0..batch {
        for i in 0..cin {
            let xs = &x[2 * (b * cin + i) * modes..2 * (b * cin + i + 1) * modes];
            for o in 0..cout {
                let rs = &r[2 * (i * cout + o) * modes..2 * (i * cout + o + 1) * modes];
                let os = &mut out[2 * (b * cout + o) * modes..2 * (b * cout + o + 1) * modes];
                for k in 0..modes {
                    let (xr, xi) = (xs[2 * k], xs[2 * k + 1]);
                    let (rr, ri) = (rs[2 * k], rs[2 * k + 1]);
                    os[2 * k] += xr * rr - xi * ri;
                    os[2 * k + 1] += xr * ri + xi * rr;
                }
            }
        }
    }
    out
}

pub(crate) fn spectral_mix_backward<T: Real>(
    x: &[T],
    r: &[T],
    g: &[T],
    batch: usize,
    cin: usize,
    cout: usize,
    modes: usize,
) -> (Vec<T>, Vec<T>) {
    let mut gx = vec![T::zero(); x.len()];
    let mut gr = vec![T::zero(); r.len()];
    for b in 0..batch {
        for i in 0..cin {
            let xoff = 2 * (b * cin + i) * modes;
            for o in 0..cout {
                let roff = 2 * (i * cout + o) * modes;
                let goff = 2 * (b * cout + o) * modes;
                for k in 0..modes {
                    let (xr, xi) = (x[xoff + 2 * k], x[xoff + 2 * k + 1]);
                    let (rr, ri) = (r[roff + 2 * k], r[roff + 2 * k + 1]);
                    let (gr_, gi) = (g[goff + 2 * k], g[goff + 2 * k + 1]);
                    // g * conj(r)
                    gx[xoff + 2 * k] += gr_ * rr + gi * ri;
                    gx[xoff + 2 * k + 1] += gi * rr - gr_ * ri;
                    // conj(x) * g
                    gr[roff + 2 * k] += xr * gr_ + xi * gi;
                    gr[roff + 2 * k + 1] += xr * gi - xi * gr_;
                }
            }
        }
    }
    (gx, gr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadcast_rules_follow_trailing_alignment() {
        assert_eq!(broadcast_shape(&[2, 3, 4], &[3, 1]).unwrap(), vec![2, 3, 4]);
        assert_eq!(broadcast_shape(&[], &[5]).unwrap(), vec![5]);
        assert!(broadcast_shape(&[2, 3], &[2]).is_err());
    }

    #[test]
    fn reduce_strides_skip_reduced_axes() {
        let a: Vec<f64> = (0..6).map(f64::from).collect();
        assert_eq!(sum_forward(&a, &[2, 3], &[1], false), vec![3.0, 12.0]);
        assert_eq!(sum_forward(&a, &[2, 3], &[0], false), vec![3.0, 5.0, 7.0]);
    }
}
