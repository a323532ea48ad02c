//! Fourier operator building blocks on `[batch, channels, grid...]` fields.

use compol_tensor::{Real, Tape, Tensor, Var};

use crate::config::Activation;
use crate::error::{CoreError, Result};

pub fn check_modes(modes: &[usize], grid: &[usize]) -> Result<()> {
    if modes.len() != grid.len() {
        return Err(CoreError::Config(format!(
            "modes {modes:?} do not match grid {grid:?}"
        )));
    }
    let last = grid.len() - 1;
    for (axis, (&k, &n)) in modes.iter().zip(grid).enumerate() {
        let cap = if axis == last { n / 2 + 1 } else { n };
        if k == 0 || k > cap {
            return Err(CoreError::Config(format!(
                "{k} modes do not fit axis {axis} of grid {grid:?} (at most {cap})"
            )));
        }
    }
    Ok(())
}

/// Bins of an `n`-point full transform with the `k` lowest |frequencies| (0, 1, -1, 2, -2, ...), ascending.
pub fn full_axis_modes(k: usize, n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..k)
        .map(|i| {
            let f = (i + 1) / 2;
            if i % 2 == 1 || i == 0 {
                f
            } else {
                n - f
            }
        })
        .collect();
    out.sort_unstable();
    out
}

pub fn activate<'t, T: Real>(v: &Var<'t, T>, act: Activation) -> Result<Var<'t, T>> {
    Ok(match act {
        Activation::Gelu => v.gelu()?,
        Activation::Tanh => v.tanh()?,
    })
}

/// Pointwise affine map: `w` is `[out, in]`, `b` is `[out]`.
pub fn affine<'t, T: Real>(v: &Var<'t, T>, w: &Var<'t, T>, b: &Var<'t, T>) -> Result<Var<'t, T>> {
    let shape = v.shape();
    let (ws, bs) = (w.shape(), b.shape());
    if shape.len() < 2 || ws.len() != 2 || ws[1] != shape[1] || bs != [ws[0]] {
        return Err(CoreError::Config(format!(
            "affine map {ws:?} + {bs:?} cannot act on field {shape:?}"
        )));
    }
    let grid: usize = shape[2..].iter().product();
    let flat = v.reshape(&[shape[0], shape[1], grid])?;
    let y = w.matmul(&flat)?.add(&b.reshape(&[ws[0], 1])?)?;
    let mut out = shape;
    out[1] = ws[0];
    Ok(y.reshape(&out)?)
}

/// `F^-1(R . F(v))` with mode truncation; `r` is complex `[c_in, c_out, modes...]`.
pub fn spectral_conv<'t, T: Real>(v: &Var<'t, T>, r: &Var<'t, T>) -> Result<Var<'t, T>> {
    let shape = v.shape();
    let rs = r.shape();
    let dims = shape.len().saturating_sub(2);
    if !(1..=2).contains(&dims) || rs.len() != 2 + dims || rs[0] != shape[1] || !r.is_complex() {
        return Err(CoreError::Config(format!(
            "spectral weights {rs:?} cannot act on field {shape:?}"
        )));
    }
    let (batch, cin, cout) = (shape[0], shape[1], rs[1]);
    let grid = &shape[2..];
    let modes = &rs[2..];
    check_modes(modes, grid)?;
    let n_last = grid[dims - 1];
    let bins = n_last / 2 + 1;
    let real_idx: Vec<usize> = (0..modes[dims - 1]).collect();
    let last_axis = 1 + dims;

    let mut h = v.rfft()?.gather(last_axis, &real_idx)?;
    let full_idx = if dims == 2 {
        let idx = full_axis_modes(modes[0], grid[0]);
        h = h.fft(2)?.gather(2, &idx)?;
        Some(idx)
    } else {
        None
    };
    let k: usize = modes.iter().product();
    let mixed = h
        .reshape(&[batch, cin, k])?
        .spectral_mix(&r.reshape(&[cin, cout, k])?)?;
    let mut out_modes = vec![batch, cout];
    out_modes.extend_from_slice(modes);
    let mut h = mixed.reshape(&out_modes)?;
    if let Some(idx) = full_idx {
        h = h.scatter(2, &idx, grid[0])?.ifft(2)?;
    }
    Ok(h.scatter(last_axis, &real_idx, bins)?.irfft(n_last)?)
}

/// `act(W v + b + spectral_conv(v, R))`.
pub fn fourier_layer<'t, T: Real>(
    v: &Var<'t, T>,
    w: &Var<'t, T>,
    b: &Var<'t, T>,
    r: &Var<'t, T>,
    act: Activation,
) -> Result<Var<'t, T>> {
    if v.shape().get(1) != w.shape().get(1) {
        return Err(CoreError::Config(format!(
            "field width {:?} does not match layer width {:?}",
            v.shape().get(1),
            w.shape().get(1)
        )));
    }
    let linear = affine(v, w, b)?;
    activate(&linear.add(&spectral_conv(v, r)?)?, act)
}

/// Normalized grid coordinates `j / n_axis` in `[0, 1)`, one channel per axis: `[batch, dims, grid...]`.
pub fn coordinates<T: Real>(batch: usize, grid: &[usize]) -> Tensor<T> {
    let dims = grid.len();
    let cells: usize = grid.iter().product();
    let mut shape = vec![batch, dims];
    shape.extend_from_slice(grid);
    Tensor::from_fn(&shape, |flat| {
        let cell = flat % cells;
        let axis = (flat / cells) % dims;
        let stride: usize = grid[axis + 1..].iter().product();
        let j = (cell / stride) % grid[axis];
        T::of(j as f64 / grid[axis] as f64)
    })
}

/// `P [f; coords]` when `coords`, else `P f`.
pub fn lift<'t, T: Real>(
    tape: &'t Tape<T>,
    f: &Var<'t, T>,
    coords: bool,
    w: &Var<'t, T>,
    b: &Var<'t, T>,
) -> Result<Var<'t, T>> {
    if coords {
        let shape = f.shape();
        let c = tape.constant(coordinates(shape[0], &shape[2..]));
        affine(&tape.concat(&[*f, c], 1)?, w, b)
    } else {
        affine(f, w, b)
    }
}

/// Two-stage head `d_h -> hidden -> GELU -> d_out`.
pub fn project<'t, T: Real>(
    v: &Var<'t, T>,
    w1: &Var<'t, T>,
    b1: &Var<'t, T>,
    w2: &Var<'t, T>,
    b2: &Var<'t, T>,
) -> Result<Var<'t, T>> {
    affine(&affine(v, w1, b1)?.gelu()?, w2, b2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_axis_modes_pick_both_signs() {
        assert_eq!(full_axis_modes(1, 8), vec![0]);
        assert_eq!(full_axis_modes(3, 8), vec![0, 1, 7]);
        assert_eq!(full_axis_modes(4, 8), vec![0, 1, 2, 7]);
        assert_eq!(full_axis_modes(8, 8), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn coordinates_follow_axes() {
        let c = coordinates::<f64>(1, &[2, 4]);
        assert_eq!(c.shape(), &[1, 2, 2, 4]);
        assert_eq!(&c.data()[..8], &[0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.5]);
        assert_eq!(
            &c.data()[8..],
            &[0.0, 0.25, 0.5, 0.75, 0.0, 0.25, 0.5, 0.75]
        );
    }
}
