//! Iterative radix-2 FFT.
//!
//! Forward transforms are unnormalized; inverse transforms carry the `1/N` factor.
//! Twiddle tables are computed in `f64` and cached per length on each thread.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use num_complex::Complex;

use crate::error::{Result, TensorError};
use crate::real::Real;

struct Plan {
    /// `exp(-2*pi*i*j/n)` for `j < n/2`.
    twiddles: Vec<(f64, f64)>,
    bitrev: Vec<usize>,
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Rc<Plan>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize) -> Rc<Plan> {
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let bits = n.trailing_zeros();
                let bitrev = (0..n)
                    .map(|i| {
                        if bits == 0 {
                            0
                        } else {
                            i.reverse_bits() >> (usize::BITS - bits)
                        }
                    })
                    .collect();
                let twiddles = (0..n / 2)
                    .map(|j| {
                        let theta = -2.0 * std::f64::consts::PI * j as f64 / n as f64;
                        (theta.cos(), theta.sin())
                    })
                    .collect();
                Rc::new(Plan { twiddles, bitrev })
            })
            .clone()
    })
}

pub fn check_length(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(TensorError::UnsupportedLength(n));
    }
    Ok(())
}

fn transform<T: Real>(buf: &mut [Complex<T>], inverse: bool) -> Result<()> {
    let n = buf.len();
    check_length(n)?;
    if n == 1 {
        return Ok(());
    }
    let plan = plan(n);
    for i in 0..n {
        let j = plan.bitrev[i];
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = n / len;
        for start in (0..n).step_by(len) {
            for j in 0..half {
                let (c, s) = plan.twiddles[j * step];
                let w = Complex::new(T::of(c), T::of(if inverse { -s } else { s }));
                let a = buf[start + j];
                let b = buf[start + j + half] * w;
                buf[start + j] = a + b;
                buf[start + j + half] = a - b;
            }
        }
        len <<= 1;
    }
    if inverse {
        let scale = T::one() / T::of(n as f64);
        for x in buf.iter_mut() {
            *x = *x * scale;
        }
    }
    Ok(())
}

/// Unnormalized forward DFT, in place.
pub fn fft<T: Real>(buf: &mut [Complex<T>]) -> Result<()> {
    transform(buf, false)
}

/// Inverse DFT with the `1/N` factor, in place.
pub fn ifft<T: Real>(buf: &mut [Complex<T>]) -> Result<()> {
    transform(buf, true)
}

/// Forward transform of a real signal, keeping the `n/2 + 1` non-negative bins.
pub fn rfft<T: Real>(signal: &[T]) -> Result<Vec<Complex<T>>> {
    let n = signal.len();
    check_length(n)?;
    let mut buf: Vec<Complex<T>> = signal.iter().map(|&x| Complex::new(x, T::zero())).collect();
    fft(&mut buf)?;
    buf.truncate(n / 2 + 1);
    Ok(buf)
}

/// Inverse of [`rfft`]: Hermitian extension of the half spectrum, then the real part.
///
/// Imaginary parts of the DC and Nyquist bins do not contribute.
pub fn irfft<T: Real>(half: &[Complex<T>], n: usize) -> Result<Vec<T>> {
    check_length(n)?;
    if half.len() != n / 2 + 1 {
        return Err(TensorError::Shape(format!(
            "half spectrum of length {} does not match signal length {n}",
            half.len()
        )));
    }
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    buf[..half.len()].copy_from_slice(half);
    for k in 1..n / 2 {
        buf[n - k] = half[k].conj();
    }
    if n == 1 {
        buf[0] = half[0];
    }
    ifft(&mut buf)?;
    Ok(buf.into_iter().map(|c| c.re).collect())
}

/// Signed integer frequency of bin `k` in an `n`-point transform.
pub fn frequency(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal_is_dc_only() {
        let n = 16;
        let c = 0.75;
        let mut buf = vec![Complex::new(c, 0.0); n];
        fft(&mut buf).unwrap();
        assert!((buf[0].re - n as f64 * c).abs() < 1e-12);
        for x in &buf[1..] {
            assert!(x.norm() < 1e-12);
        }
    }

    #[test]
    fn cosine_lands_on_its_bins() {
        let n = 32;
        let k = 5;
        let signal: Vec<f64> = (0..n)
            .map(|j| (2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64).cos())
            .collect();
        let mut buf: Vec<_> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
        fft(&mut buf).unwrap();
        for (bin, x) in buf.iter().enumerate() {
            let expected = if bin == k || bin == n - k {
                n as f64 / 2.0
            } else {
                0.0
            };
            assert!(
                (x.re - expected).abs() < 1e-10 && x.im.abs() < 1e-10,
                "bin {bin}"
            );
        }
        let half = rfft(&signal).unwrap();
        assert_eq!(half.len(), n / 2 + 1);
        assert!((half[k].re - n as f64 / 2.0).abs() < 1e-10);
    }

    #[test]
    fn non_power_of_two_is_rejected() {
        let mut buf = vec![Complex::new(0.0f64, 0.0); 12];
        assert_eq!(fft(&mut buf), Err(TensorError::UnsupportedLength(12)));
        assert!(rfft(&[0.0f32; 0]).is_err());
    }

    #[test]
    fn irfft_inverts_rfft() {
        let signal: Vec<f64> = (0..64).map(|j| ((j * 7 % 13) as f64).sin()).collect();
        let back = irfft(&rfft(&signal).unwrap(), 64).unwrap();
        for (a, b) in signal.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
