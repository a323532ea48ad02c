//! Periodic grids, multi-dimensional transforms and spectral resampling.

use compol_tensor::fft;
use num_complex::Complex64;

use crate::error::{DatagenError, Result};

/// A periodic square grid with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub n: usize,
    pub dims: usize,
}

impl Grid {
    pub fn new(n: usize, dims: usize) -> Result<Self> {
        if !(1..=2).contains(&dims) {
            return Err(DatagenError::Spec(format!(
                "{dims}-D grids are not supported"
            )));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(DatagenError::Spec(format!(
                "resolution {n} is not a power of two"
            )));
        }
        Ok(Self { n, dims })
    }

    pub fn cells(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.n; self.dims]
    }

    /// Integer frequency of every axis, per cell, in row-major order.
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        (0..self.cells())
            .map(|c| {
                let mut idx = c;
                let mut out = vec![0.0; self.dims];
                for d in (0..self.dims).rev() {
                    out[d] = fft::frequency(idx % self.n, self.n) as f64;
                    idx /= self.n;
                }
                out
            })
            .collect()
    }

    /// `|k|^2` per cell for wavevectors `2 pi k / length`.
    pub fn squared_wavenumbers(&self, length: f64) -> Vec<f64> {
        let s = 2.0 * std::f64::consts::PI / length;
        self.frequencies()
            .iter()
            .map(|k| k.iter().map(|x| (s * x).powi(2)).sum())
            .collect()
    }

    /// Index of the cell holding frequency `-k` for the cell at `c`.
    pub fn mirror(&self, c: usize) -> usize {
        let mut idx = c;
        let mut out = 0;
        let mut stride = 1;
        for _ in 0..self.dims {
            let j = idx % self.n;
            out += ((self.n - j) % self.n) * stride;
            idx /= self.n;
            stride *= self.n;
        }
        out
    }
}

/// In-place transform of a row-major `n^dims` array; the inverse carries `1/n^dims`.
pub fn fftn(buf: &mut [Complex64], grid: Grid, inverse: bool) -> Result<()> {
    let n = grid.n;
    let run = |line: &mut [Complex64]| -> Result<()> {
        if inverse {
            fft::ifft(line)?;
        } else {
            fft::fft(line)?;
        }
        Ok(())
    };
    for row in buf.chunks_mut(n) {
        run(row)?;
    }
    if grid.dims == 2 {
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = buf[i * n + j];
            }
            run(&mut col)?;
            for i in 0..n {
                buf[i * n + j] = col[i];
            }
        }
    }
    Ok(())
}

pub fn to_spectral(field: &[f64], grid: Grid) -> Result<Vec<Complex64>> {
    let mut buf: Vec<Complex64> = field.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fftn(&mut buf, grid, false)?;
    Ok(buf)
}

/// Real part of the inverse transform.
pub fn to_physical(spec: &[Complex64], grid: Grid) -> Result<Vec<f64>> {
    let mut buf = spec.to_vec();
    fftn(&mut buf, grid, true)?;
    Ok(buf.into_iter().map(|c| c.re).collect())
}

/// Fine-grid bins that fold onto coarse bin `j`: `|k| < nc/2` map directly, the coarse
/// Nyquist bin collects both fine bins at `+-nc/2`.
fn folded(j: usize, nc: usize, nf: usize) -> Vec<usize> {
    let half = nc / 2;
    if j < half {
        vec![j]
    } else if j > half {
        vec![nf - (nc - j)]
    } else {
        vec![half, nf - half]
    }
}

/// Spectral truncation of a field from `fine` to `coarse` points per axis.
///
/// Exact for fields band-limited to `|k| <= coarse/2`, where it reduces to pointwise
/// decimation.
pub fn subsample(field: &[f64], fine: Grid, coarse: usize) -> Result<Vec<f64>> {
    let coarse = Grid::new(coarse, fine.dims)?;
    if coarse.n > fine.n || fine.n % coarse.n != 0 {
        return Err(DatagenError::Spec(format!(
            "cannot subsample {} points to {}",
            fine.n, coarse.n
        )));
    }
    if field.len() != fine.cells() {
        return Err(DatagenError::Spec(format!(
            "field has {} values, grid has {}",
            field.len(),
            fine.cells()
        )));
    }
    if coarse.n == fine.n {
        return Ok(field.to_vec());
    }
    let spec = to_spectral(field, fine)?;
    let (nc, nf) = (coarse.n, fine.n);
    let mut out = vec![Complex64::new(0.0, 0.0); coarse.cells()];
    for (c, slot) in out.iter_mut().enumerate() {
        let (j0, j1) = if fine.dims == 1 {
            (0, c)
        } else {
            (c / nc, c % nc)
        };
        let rows = if fine.dims == 1 {
            vec![0]
        } else {
            folded(j0, nc, nf)
        };
        for &r in &rows {
            for &q in &folded(j1, nc, nf) {
                *slot += spec[r * nf + q];
            }
        }
    }
    let scale = (nc as f64 / nf as f64).powi(fine.dims as i32);
    Ok(to_physical(&out, coarse)?
        .into_iter()
        .map(|x| x * scale)
        .collect())
}
