//! Dense tensors, reverse-mode differentiation and FFT primitives.

mod error;
pub mod fft;
pub mod gradcheck;
mod kernels;
mod real;
mod seed;
mod tape;
mod tensor;

pub use error::{Result, TensorError};
pub use gradcheck::{finite_diff_check, finite_diff_check_many, GradCheck};
pub use real::{DType, Real};
pub use seed::derive_seed;
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
