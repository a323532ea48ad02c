use std::sync::Arc;

use crate::error::{Result, TensorError};
use crate::real::{DType, Real};

/// Dense row-major array of real values or interleaved `(re, im)` pairs.
///
/// Storage is shared and immutable; cloning a tensor is cheap.
#[derive(Clone, Debug)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    complex: bool,
    data: Arc<[T]>,
}

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl<T: Real> Tensor<T> {
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if data.len() != numel(shape) {
            return Err(TensorError::Shape(format!(
                "{} values do not fill shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Self::from_parts(shape.to_vec(), false, data))
    }

    /// Complex tensor from interleaved `(re, im)` pairs.
    pub fn new_complex(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if data.len() != 2 * numel(shape) {
            return Err(TensorError::Shape(format!(
                "{} scalars do not fill complex shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Self::from_parts(shape.to_vec(), true, data))
    }

    pub(crate) fn from_parts(shape: Vec<usize>, complex: bool, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), numel(&shape) * if complex { 2 } else { 1 });
        Self {
            shape,
            complex,
            data: data.into(),
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, T::zero())
    }

    pub fn zeros_complex(shape: &[usize]) -> Self {
        Self::from_parts(shape.to_vec(), true, vec![T::zero(); 2 * numel(shape)])
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, T::one())
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Self::from_parts(shape.to_vec(), false, vec![value; numel(shape)])
    }

    pub fn scalar(value: T) -> Self {
        Self::from_parts(Vec::new(), false, vec![value])
    }

    /// Builds a real tensor from a function of the row-major flat index.
    pub fn from_fn(shape: &[usize], f: impl FnMut(usize) -> T) -> Self {
        let data = (0..numel(shape)).map(f).collect();
        Self::from_parts(shape.to_vec(), false, data)
    }

    pub fn zeros_like(&self) -> Self {
        Self::from_parts(
            self.shape.clone(),
            self.complex,
            vec![T::zero(); self.data.len()],
        )
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        numel(&self.shape)
    }

    pub fn is_complex(&self) -> bool {
        self.complex
    }

    pub fn dtype(&self) -> DType {
        if self.complex {
            T::COMPLEX
        } else {
            T::REAL
        }
    }

    /// Raw storage; complex tensors expose interleaved pairs.
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.data.to_vec()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> Result<T> {
        if self.numel() != 1 || self.complex {
            return Err(TensorError::NotScalar(self.shape.clone()));
        }
        Ok(self.data[0])
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        if numel(shape) != self.numel() {
            return Err(TensorError::Shape(format!(
                "cannot reshape {:?} into {:?}",
                self.shape, shape
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            complex: self.complex,
            data: self.data.clone(),
        })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let data = self.data.iter().map(|&x| f(x)).collect();
        Self::from_parts(self.shape.clone(), self.complex, data)
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        let data = self.data.iter().map(|&x| U::of(x.as_f64())).collect();
        Tensor::from_parts(self.shape.clone(), self.complex, data)
    }

    /// Circular shift by `shift` positions along `axis` (positive moves values to higher indices).
    pub fn roll(&self, axis: usize, shift: isize) -> Result<Self> {
        if axis >= self.rank() {
            return Err(TensorError::Axis {
                axis,
                rank: self.rank(),
            });
        }
        let n = self.shape[axis];
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize =
            self.shape[axis + 1..].iter().product::<usize>() * if self.complex { 2 } else { 1 };
        let mut out = vec![T::zero(); self.data.len()];
        let s = shift.rem_euclid(n.max(1) as isize) as usize;
        for o in 0..outer {
            for j in 0..n {
                let dst = (o * n + (j + s) % n) * inner;
                let src = (o * n + j) * inner;
                out[dst..dst + inner].copy_from_slice(&self.data[src..src + inner]);
            }
        }
        Ok(Self::from_parts(self.shape.clone(), self.complex, out))
    }

    /// Largest absolute elementwise difference; shapes must match exactly.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.shape != other.shape || self.complex != other.complex {
            return Err(TensorError::Shape(format!(
                "cannot compare {:?} with {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Same shape, dtype and bit pattern.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.shape == other.shape
            && self.complex == other.complex
            && self
                .data
                .iter()
                .zip(other.data.iter())
                .all(|(a, b)| a.as_f64().to_bits() == b.as_f64().to_bits())
    }

    /// Sub-tensor `index` along axis 0, with that axis removed.
    pub fn index_first(&self, index: usize) -> Result<Self> {
        if self.rank() == 0 || index >= self.shape[0] {
            return Err(TensorError::Shape(format!(
                "index {index} out of range for shape {:?}",
                self.shape
            )));
        }
        let block = self.data.len() / self.shape[0];
        let data = self.data[index * block..(index + 1) * block].to_vec();
        Ok(Self::from_parts(
            self.shape[1..].to_vec(),
            self.complex,
            data,
        ))
    }

    /// Stacks equally shaped tensors along a new leading axis.
    pub fn stack(parts: &[Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| TensorError::Shape("cannot stack zero tensors".into()))?;
        let mut data = Vec::with_capacity(first.data.len() * parts.len());
        for p in parts {
            if p.shape != first.shape || p.complex != first.complex {
                return Err(TensorError::Shape(format!(
                    "cannot stack {:?} with {:?}",
                    first.shape, p.shape
                )));
            }
            data.extend_from_slice(&p.data);
        }
        let mut shape = vec![parts.len()];
        shape.extend_from_slice(&first.shape);
        Ok(Self::from_parts(shape, first.complex, data))
    }
}

impl<T: Real> PartialEq for Tensor<T> {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && self.complex == other.complex && self.data == other.data
    }
}
