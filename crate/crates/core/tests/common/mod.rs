#![allow(dead_code)]

use compol_tensor::{Real, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rand_real<T: Real>(shape: &[usize], seed: u64) -> Tensor<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| T::of(rng.random_range(-1.0..1.0)))
}

pub fn rand_complex<T: Real>(shape: &[usize], seed: u64) -> Tensor<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let data = (0..2 * n)
        .map(|_| T::of(rng.random_range(-1.0..1.0)))
        .collect();
    Tensor::new_complex(shape, data).unwrap()
}

/// `[rows, cols]` with ones on the diagonal.
pub fn eye<T: Real>(rows: usize, cols: usize) -> Tensor<T> {
    Tensor::from_fn(&[rows, cols], |i| {
        if i / cols == i % cols {
            T::one()
        } else {
            T::zero()
        }
    })
}
