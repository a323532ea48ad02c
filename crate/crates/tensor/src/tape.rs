//! Reverse-mode differentiation tape.
//!
//! Complex gradients are stored as `(dL/d re, dL/d im)` pairs, so a real loss
//! sees a complex node exactly like two real coordinates.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Result, TensorError};
use crate::kernels::{self, BinaryKind, UnaryKind};
use crate::real::Real;
use crate::tensor::{numel, Tensor};

static NEXT_TAPE: AtomicUsize = AtomicUsize::new(0);

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    Binary(BinaryKind, usize, usize),
    Unary(UnaryKind, usize),
    Recip(usize),
    Scale(usize, T),
    Softmax(usize, usize),
    Matmul(usize, usize),
    Sum {
        a: usize,
        axes: Vec<usize>,
        scale: T,
    },
    Reshape(usize),
    Concat {
        parts: Vec<usize>,
        axis: usize,
    },
    Gather {
        a: usize,
        axis: usize,
        indices: Vec<usize>,
    },
    Scatter {
        a: usize,
        axis: usize,
        indices: Vec<usize>,
    },
    Fft {
        a: usize,
        axis: usize,
        inverse: bool,
    },
    Rfft(usize),
    Irfft(usize),
    SpectralMix(usize, usize),
    ToComplex(usize),
    RealPart(usize),
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Records operations on tensors so that gradients can be computed in one backward sweep.
///
/// A tape is confined to a single thread; independent tapes may run concurrently.
pub struct Tape<T: Real> {
    id: usize,
    nodes: RefCell<Vec<Node<T>>>,
}

impl<T: Real> fmt::Debug for Tape<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape")
            .field("id", &self.id)
            .field("nodes", &self.len())
            .finish()
    }
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Handle to a tensor recorded on a tape.
#[derive(Clone, Copy)]
pub struct Var<'t, T: Real> {
    tape: &'t Tape<T>,
    id: usize,
}

impl<T: Real> fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Var(tape {}, node {}, {:?})",
            self.tape.id,
            self.id,
            self.shape()
        )
    }
}

/// Gradients of a scalar loss with respect to the leaves of a tape.
#[derive(Debug, Clone)]
pub struct Gradients<T: Real> {
    tape: usize,
    grads: HashMap<usize, Tensor<T>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient for `var`; zero when the loss does not depend on it.
    pub fn get(&self, var: &Var<'_, T>) -> Result<Tensor<T>> {
        if var.tape.id != self.tape {
            return Err(TensorError::NotOnTape(var.id));
        }
        Ok(self
            .grads
            .get(&var.id)
            .cloned()
            .unwrap_or_else(|| var.value().zeros_like()))
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE.fetch_add(1, Ordering::Relaxed),
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    /// Differentiable leaf.
    pub fn var(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, Op::Leaf, true)
    }

    /// Leaf excluded from differentiation.
    pub fn constant(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, Op::Leaf, false)
    }

    fn value(&self, id: usize) -> Tensor<T> {
        self.nodes.borrow()[id].value.clone()
    }

    fn requires(&self, id: usize) -> bool {
        self.nodes.borrow()[id].requires_grad
    }

    fn own<'t>(&'t self, v: &Var<'_, T>) -> Result<usize> {
        if v.tape.id != self.id {
            return Err(TensorError::NotOnTape(v.id));
        }
        Ok(v.id)
    }

    /// Concatenates along `axis`; all other extents must agree.
    pub fn concat<'t>(&'t self, parts: &[Var<'t, T>], axis: usize) -> Result<Var<'t, T>> {
        let first = parts
            .first()
            .ok_or_else(|| TensorError::Shape("cannot concatenate zero tensors".into()))?;
        let ids = parts
            .iter()
            .map(|p| self.own(p))
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<Tensor<T>> = ids.iter().map(|&i| self.value(i)).collect();
        let base = values[0].shape().to_vec();
        let complex = values[0].is_complex();
        if axis >= base.len() {
            return Err(TensorError::Axis {
                axis,
                rank: base.len(),
            });
        }
        let mut total = 0;
        for v in &values {
            if v.is_complex() != complex {
                return Err(TensorError::DType("concat mixes real and complex".into()));
            }
            let s = v.shape();
            let same = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(i, (a, b))| i == axis || a == b);
            if !same {
                return Err(TensorError::Shape(format!(
                    "cannot concatenate {:?} with {:?} along axis {axis}",
                    base, s
                )));
            }
            total += s[axis];
        }
        let width = if complex { 2 } else { 1 };
        let outer = numel(&base[..axis]);
        let inner = numel(&base[axis + 1..]) * width;
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for v in &values {
                let block = v.shape()[axis] * inner;
                data.extend_from_slice(&v.data()[o * block..(o + 1) * block]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        let requires = ids.iter().any(|&i| self.requires(i));
        let _ = first;
        Ok(self.push(
            Tensor::from_parts(shape, complex, data),
            Op::Concat { parts: ids, axis },
            requires,
        ))
    }

    /// Runs the backward sweep from a scalar real `loss`.
    pub fn backward(&self, loss: &Var<'_, T>) -> Result<Gradients<T>> {
        let root = self.own(loss)?;
        let nodes = self.nodes.borrow();
        let lv = &nodes[root].value;
        if lv.numel() != 1 || lv.is_complex() {
            return Err(TensorError::NotScalar(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; root + 1];
        grads[root] = Some(vec![T::one()]);
        let mut leaves = HashMap::new();
        for id in (0..=root).rev() {
            let Some(g) = grads[id].take() else {
                continue;
            };
            let node = &nodes[id];
            if !node.requires_grad {
                continue;
            }
            let y = &node.value;
            match &node.op {
                Op::Leaf => {
                    leaves.insert(
                        id,
                        Tensor::from_parts(y.shape().to_vec(), y.is_complex(), g),
                    );
                }
                Op::Binary(kind, a, b) => {
                    let (va, vb) = (&nodes[*a].value, &nodes[*b].value);
                    let (ga, gb) = kernels::binary_backward(
                        *kind,
                        &g,
                        y.shape(),
                        va.data(),
                        va.shape(),
                        vb.data(),
                        vb.shape(),
                        y.is_complex(),
                    );
                    accumulate(&nodes, &mut grads, *a, ga);
                    accumulate(&nodes, &mut grads, *b, gb);
                }
                Op::Unary(kind, a) => {
                    let ga = kernels::unary_backward(*kind, nodes[*a].value.data(), y.data(), &g);
                    accumulate(&nodes, &mut grads, *a, ga);
                }
                Op::Recip(a) => {
                    let ga = y.data().iter().zip(&g).map(|(&r, &g)| -g * r * r).collect();
                    accumulate(&nodes, &mut grads, *a, ga);
                }
                Op::Scale(a, factor) => {
                    let ga = g.iter().map(|&x| x * *factor).collect();
                    accumulate(&nodes, &mut grads, *a, ga);
                }
                Op::Softmax(a, axis) => {
                    let ga = kernels::softmax_backward(y.data(), &g, y.shape(), *axis);
                    accumulate(&nodes, &mut grads, *a, ga);
                }
                Op::Matmul(a, b) => {
                    let (va, vb) = (&nodes[*a].value, &nodes[*b].value);
                    let dims = kernels::matmul_dims(va.shape(), vb.shape())?;
                    let (ga, gb) = kernels::matmul_backward(&dims, va.data(), vb.data(), &g);
                    accumulate(&nodes, &mut grads, *a, ga);
                    accumulate(&nodes, &mut grads, *b, gb);
                }
                Op::Sum { a, axes, scale } => {
                    let va = &nodes[*a].value;
                    let ga = kernels::sum_backward(&g, va.shape(), axes, va.is_complex(), *scale);
                    accumulate(&nodes, &mut grads, *a, ga);
                }
                Op::Reshape(a) => accumulate(&nodes, &mut grads, *a, g),
                Op::Concat { parts, axis } => {
                    let width = if y.is_complex() { 2 } else { 1 };
                    let outer = numel(&y.shape()[..*axis]);
                    let inner = numel(&y.shape()[*axis + 1..]) * width;
                    let total = y.shape()[*axis] * inner;
                    let mut offset = 0;
                    for &p in parts {
                        let block = nodes[p].value.shape()[*axis] * inner;
                        let mut gp = Vec::with_capacity(outer * block);
                        for o in 0..outer {
                            let start = o * total + offset;
                            gp.extend_from_slice(&g[start..start + block]);
                        }
                        offset += block;
                        accumulate(&nodes, &mut grads, p, gp);
                    }
                }
                Op::Gather { a, axis, indices } => {
                    let va = &nodes[*a].value;
                    let width = if y.is_complex() { 2 } else { 1 };
                    let ga =
                        kernels::scatter(&g, y.shape(), *axis, indices, va.shape()[*axis], width);
                    accumulate(&nodes, &mut grads, *a, ga);
                }
                Op::Scatter { a, axis, indices } => {
                    let width = if y.is_complex() { 2 } else { 1 };
                    let ga = kernels::gather(&g, y.shape(), *axis, indices, width);
                    accumulate(&nodes, &mut grads, *a, ga);
                }
                Op::Fft { a, axis, inverse } => {
                    let n = T::of(y.shape()[*axis] as f64);
                    let mut ga = kernels::fft_axis(&g, y.shape(), *axis, !*inverse)?;
                    let factor = if *inverse { T::one() / n } else { n };
                    ga.iter_mut().for_each(|x| *x *= factor);
                    accumulate(&nodes, &mut grads, *a, ga);
                }
                Op::Rfft(a) => {
                    let n = *nodes[*a].value.shape().last().unwrap_or(&1);
                    let ga = kernels::rfft_last_backward(&g, n)?;
                    accumulate(&nodes, &mut grads, *a, ga);
                }
                Op::Irfft(a) => {
                    let n = *y.shape().last().unwrap_or(&1);
                    let ga = kernels::irfft_last_backward(&g, n)?;
                    accumulate(&nodes, &mut grads, *a, ga);
                }
                Op::SpectralMix(x, r) => {
                    let (vx, vr) = (&nodes[*x].value, &nodes[*r].value);
                    let (b, cin, k) = (vx.shape()[0], vx.shape()[1], vx.shape()[2]);
                    let cout = vr.shape()[1];
                    let (gx, gr) =
                        kernels::spectral_mix_backward(vx.data(), vr.data(), &g, b, cin, cout, k);
                    accumulate(&nodes, &mut grads, *x, gx);
                    accumulate(&nodes, &mut grads, *r, gr);
                }
                Op::ToComplex(a) => {
                    let ga = g.chunks(2).map(|c| c[0]).collect();
                    accumulate(&nodes, &mut grads, *a, ga);
                }
                Op::RealPart(a) => {
                    let ga = g.iter().flat_map(|&x| [x, T::zero()]).collect();
                    accumulate(&nodes, &mut grads, *a, ga);
                }
            }
        }
        Ok(Gradients {
            tape: self.id,
            grads: leaves,
        })
    }
}

fn accumulate<T: Real>(nodes: &[Node<T>], grads: &mut [Option<Vec<T>>], id: usize, g: Vec<T>) {
    if !nodes[id].requires_grad {
        return;
    }
    match &mut grads[id] {
        Some(existing) => existing.iter_mut().zip(&g).for_each(|(e, x)| *e += *x),
        slot => *slot = Some(g),
    }
}

fn check_axis(axis: usize, rank: usize) -> Result<()> {
    if axis >= rank {
        return Err(TensorError::Axis { axis, rank });
    }
    Ok(())
}

impl<'t, T: Real> Var<'t, T> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    pub fn value(&self) -> Tensor<T> {
        self.tape.value(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].value.shape().to_vec()
    }

    pub fn is_complex(&self) -> bool {
        self.tape.nodes.borrow()[self.id].value.is_complex()
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.requires(self.id)
    }

    fn unary_result(&self, value: Tensor<T>, op: Op<T>) -> Var<'t, T> {
        self.tape.push(value, op, self.requires_grad())
    }

    fn binary(&self, other: &Var<'t, T>, kind: BinaryKind) -> Result<Var<'t, T>> {
        let b = self.tape.own(other)?;
        let (va, vb) = (self.value(), self.tape.value(b));
        if va.is_complex() != vb.is_complex() {
            return Err(TensorError::DType(format!(
                "{} and {} operands",
                va.dtype(),
                vb.dtype()
            )));
        }
        let (shape, data) = kernels::binary_forward(
            kind,
            va.data(),
            va.shape(),
            vb.data(),
            vb.shape(),
            va.is_complex(),
        )?;
        let requires = self.requires_grad() || self.tape.requires(b);
        Ok(self.tape.push(
            Tensor::from_parts(shape, va.is_complex(), data),
            Op::Binary(kind, self.id, b),
            requires,
        ))
    }

    pub fn add(&self, other: &Var<'t, T>) -> Result<Var<'t, T>> {
        self.binary(other, BinaryKind::Add)
    }

    pub fn sub(&self, other: &Var<'t, T>) -> Result<Var<'t, T>> {
        self.binary(other, BinaryKind::Sub)
    }

    pub fn mul(&self, other: &Var<'t, T>) -> Result<Var<'t, T>> {
        self.binary(other, BinaryKind::Mul)
    }

    /// Multiplies every entry (both parts, if complex) by `factor`.
    pub fn scale(&self, factor: T) -> Var<'t, T> {
        let v = self.value();
        let out = v.map(|x| x * factor);
        self.unary_result(out, Op::Scale(self.id, factor))
    }

    fn real_unary(&self, kind: UnaryKind) -> Result<Var<'t, T>> {
        let v = self.value();
        if v.is_complex() {
            return Err(TensorError::DType(format!("{kind:?} needs a real operand")));
        }
        let out = kernels::unary_forward(kind, v.data());
        Ok(self.unary_result(
            Tensor::from_parts(v.shape().to_vec(), false, out),
            Op::Unary(kind, self.id),
        ))
    }

    pub fn tanh(&self) -> Result<Var<'t, T>> {
        self.real_unary(UnaryKind::Tanh)
    }

    pub fn sigmoid(&self) -> Result<Var<'t, T>> {
        self.real_unary(UnaryKind::Sigmoid)
    }

    /// GELU, tanh approximation.
    pub fn gelu(&self) -> Result<Var<'t, T>> {
        self.real_unary(UnaryKind::Gelu)
    }

    pub fn sqrt(&self) -> Result<Var<'t, T>> {
        self.real_unary(UnaryKind::Sqrt)
    }

    pub fn recip(&self) -> Result<Var<'t, T>> {
        let v = self.value();
        if v.is_complex() {
            return Err(TensorError::DType("recip needs a real operand".into()));
        }
        Ok(self.unary_result(v.map(|x| T::one() / x), Op::Recip(self.id)))
    }

    pub fn softmax(&self, axis: usize) -> Result<Var<'t, T>> {
        let v = self.value();
        check_axis(axis, v.rank())?;
        if v.is_complex() {
            return Err(TensorError::DType("softmax needs a real operand".into()));
        }
        let out = kernels::softmax_forward(v.data(), v.shape(), axis);
        Ok(self.unary_result(
            Tensor::from_parts(v.shape().to_vec(), false, out),
            Op::Softmax(self.id, axis),
        ))
    }

    /// Batched real matrix product over the last two axes.
    pub fn matmul(&self, other: &Var<'t, T>) -> Result<Var<'t, T>> {
        let b = self.tape.own(other)?;
        let (va, vb) = (self.value(), self.tape.value(b));
        if va.is_complex() || vb.is_complex() {
            return Err(TensorError::DType("matmul needs real operands".into()));
        }
        let dims = kernels::matmul_dims(va.shape(), vb.shape())?;
        let out = kernels::matmul_forward(&dims, va.data(), vb.data());
        let requires = self.requires_grad() || self.tape.requires(b);
        Ok(self.tape.push(
            Tensor::from_parts(dims.out_shape.clone(), false, out),
            Op::Matmul(self.id, b),
            requires,
        ))
    }

    fn reduce(&self, axes: &[usize], mean: bool) -> Result<Var<'t, T>> {
        let v = self.value();
        let mut axes = axes.to_vec();
        axes.sort_unstable();
        axes.dedup();
        for &a in &axes {
            check_axis(a, v.rank())?;
        }
        let count: usize = axes.iter().map(|&a| v.shape()[a]).product();
        let scale = if mean {
            T::one() / T::of(count as f64)
        } else {
            T::one()
        };
        let mut out = kernels::sum_forward(v.data(), v.shape(), &axes, v.is_complex());
        if mean {
            out.iter_mut().for_each(|x| *x *= scale);
        }
        let shape = kernels::reduced_shape(v.shape(), &axes);
        Ok(self.unary_result(
            Tensor::from_parts(shape, v.is_complex(), out),
            Op::Sum {
                a: self.id,
                axes,
                scale,
            },
        ))
    }

    /// Sums over `axes`, removing them. An empty list is the identity.
    pub fn sum(&self, axes: &[usize]) -> Result<Var<'t, T>> {
        self.reduce(axes, false)
    }

    pub fn mean(&self, axes: &[usize]) -> Result<Var<'t, T>> {
        self.reduce(axes, true)
    }

    pub fn sum_all(&self) -> Result<Var<'t, T>> {
        let axes: Vec<usize> = (0..self.shape().len()).collect();
        self.sum(&axes)
    }

    pub fn mean_all(&self) -> Result<Var<'t, T>> {
        let axes: Vec<usize> = (0..self.shape().len()).collect();
        self.mean(&axes)
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Var<'t, T>> {
        let v = self.value().reshape(shape)?;
        Ok(self.unary_result(v, Op::Reshape(self.id)))
    }

    /// Selects `indices` along `axis`.
    pub fn gather(&self, axis: usize, indices: &[usize]) -> Result<Var<'t, T>> {
        let v = self.value();
        check_axis(axis, v.rank())?;
        let n = v.shape()[axis];
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(TensorError::Shape(format!(
                "index {bad} out of range for extent {n}"
            )));
        }
        let width = if v.is_complex() { 2 } else { 1 };
        let data = kernels::gather(v.data(), v.shape(), axis, indices, width);
        let mut shape = v.shape().to_vec();
        shape[axis] = indices.len();
        Ok(self.unary_result(
            Tensor::from_parts(shape, v.is_complex(), data),
            Op::Gather {
                a: self.id,
                axis,
                indices: indices.to_vec(),
            },
        ))
    }

    /// Places slices along `axis` at `indices` of a zero tensor with extent `len` there.
    pub fn scatter(&self, axis: usize, indices: &[usize], len: usize) -> Result<Var<'t, T>> {
        let v = self.value();
        check_axis(axis, v.rank())?;
        if indices.len() != v.shape()[axis] || indices.iter().any(|&i| i >= len) {
            return Err(TensorError::Shape(format!(
                "cannot scatter extent {} into {len} slots",
                v.shape()[axis]
            )));
        }
        let width = if v.is_complex() { 2 } else { 1 };
        let data = kernels::scatter(v.data(), v.shape(), axis, indices, len, width);
        let mut shape = v.shape().to_vec();
        shape[axis] = len;
        Ok(self.unary_result(
            Tensor::from_parts(shape, v.is_complex(), data),
            Op::Scatter {
                a: self.id,
                axis,
                indices: indices.to_vec(),
            },
        ))
    }

    fn transform(&self, axis: usize, inverse: bool) -> Result<Var<'t, T>> {
        let v = self.value();
        check_axis(axis, v.rank())?;
        if !v.is_complex() {
            return Err(TensorError::DType("fft needs a complex operand".into()));
        }
        let data = kernels::fft_axis(v.data(), v.shape(), axis, inverse)?;
        Ok(self.unary_result(
            Tensor::from_parts(v.shape().to_vec(), true, data),
            Op::Fft {
                a: self.id,
                axis,
                inverse,
            },
        ))
    }

    /// Unnormalized complex DFT along `axis`.
    pub fn fft(&self, axis: usize) -> Result<Var<'t, T>> {
        self.transform(axis, false)
    }

    /// Inverse complex DFT along `axis`, scaled by `1/N`.
    pub fn ifft(&self, axis: usize) -> Result<Var<'t, T>> {
        self.transform(axis, true)
    }

    /// Real-input DFT along the last axis, keeping `N/2 + 1` bins.
    pub fn rfft(&self) -> Result<Var<'t, T>> {
        let v = self.value();
        if v.is_complex() || v.rank() == 0 {
            return Err(TensorError::DType(
                "rfft needs a real tensor of rank >= 1".into(),
            ));
        }
        let n = v.shape()[v.rank() - 1];
        let data = kernels::rfft_last(v.data(), n)?;
        let mut shape = v.shape().to_vec();
        *shape.last_mut().expect("rank >= 1") = n / 2 + 1;
        Ok(self.unary_result(Tensor::from_parts(shape, true, data), Op::Rfft(self.id)))
    }

    /// Inverse of [`Var::rfft`] producing `n` real samples along the last axis.
    pub fn irfft(&self, n: usize) -> Result<Var<'t, T>> {
        let v = self.value();
        if !v.is_complex() || v.rank() == 0 {
            return Err(TensorError::DType(
                "irfft needs a complex tensor of rank >= 1".into(),
            ));
        }
        kernels_check_half(v.shape()[v.rank() - 1], n)?;
        let data = kernels::irfft_last(v.data(), n)?;
        let mut shape = v.shape().to_vec();
        *shape.last_mut().expect("rank >= 1") = n;
        Ok(self.unary_result(Tensor::from_parts(shape, false, data), Op::Irfft(self.id)))
    }

    /// Per-mode complex channel mixing: `self` is `[batch, c_in, k]`, `weights` is `[c_in, c_out, k]`.
    pub fn spectral_mix(&self, weights: &Var<'t, T>) -> Result<Var<'t, T>> {
        let r = self.tape.own(weights)?;
        let (vx, vr) = (self.value(), self.tape.value(r));
        if !vx.is_complex() || !vr.is_complex() {
            return Err(TensorError::DType(
                "spectral_mix needs complex operands".into(),
            ));
        }
        let (xs, rs) = (vx.shape(), vr.shape());
        if xs.len() != 3 || rs.len() != 3 || xs[1] != rs[0] || xs[2] != rs[2] {
            return Err(TensorError::Shape(format!(
                "spectral_mix expects [b, i, k] x [i, o, k], got {xs:?} x {rs:?}"
            )));
        }
        let data = kernels::spectral_mix(vx.data(), vr.data(), xs[0], xs[1], rs[1], xs[2]);
        let requires = self.requires_grad() || self.tape.requires(r);
        Ok(self.tape.push(
            Tensor::from_parts(vec![xs[0], rs[1], xs[2]], true, data),
            Op::SpectralMix(self.id, r),
            requires,
        ))
    }

    /// Embeds a real tensor as complex values with zero imaginary part.
    pub fn to_complex(&self) -> Result<Var<'t, T>> {
        let v = self.value();
        if v.is_complex() {
            return Err(TensorError::DType("operand is already complex".into()));
        }
        let data = v.data().iter().flat_map(|&x| [x, T::zero()]).collect();
        Ok(self.unary_result(
            Tensor::from_parts(v.shape().to_vec(), true, data),
            Op::ToComplex(self.id),
        ))
    }

    pub fn real_part(&self) -> Result<Var<'t, T>> {
        let v = self.value();
        if !v.is_complex() {
            return Err(TensorError::DType("operand is not complex".into()));
        }
        let data = v.data().chunks(2).map(|c| c[0]).collect();
        Ok(self.unary_result(
            Tensor::from_parts(v.shape().to_vec(), false, data),
            Op::RealPart(self.id),
        ))
    }
}

fn kernels_check_half(bins: usize, n: usize) -> Result<()> {
    if bins != n / 2 + 1 {
        return Err(TensorError::Shape(format!(
            "{bins} bins do not match an inverse of length {n}"
        )));
    }
    Ok(())
}
