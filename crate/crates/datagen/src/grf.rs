use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DatagenError, Result};
use crate::spectral::{fftn, Grid};

/// Periodic Gaussian random field with a squared-exponential covariance
/// `sigma^2 exp(-r^2 / (2 l^2))` on the unit domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrfSpec {
    pub dims: usize,
    pub resolution: usize,
    pub length_scale: f64,
    pub amplitude: f64,
}

impl GrfSpec {
    pub fn validate(&self) -> Result<Grid> {
        if !(self.length_scale > 0.0) {
            return Err(DatagenError::Spec(format!(
                "length scale must be positive, got {}",
                self.length_scale
            )));
        }
        if !(self.amplitude >= 0.0) {
            return Err(DatagenError::Spec(format!(
                "amplitude must be nonnegative, got {}",
                self.amplitude
            )));
        }
        Grid::new(self.resolution, self.dims)
    }
}

/// Precomputed per-mode standard deviations for repeated draws.
#[derive(Debug, Clone)]
pub struct GrfSampler {
    grid: Grid,
    /// `sqrt(w_k / 2)`, with `sum_k w_k = sigma^2`.
    scale: Vec<f64>,
}

impl GrfSampler {
    pub fn new(spec: &GrfSpec) -> Result<Self> {
        let grid = spec.validate()?;
        let c = 2.0 * (std::f64::consts::PI * spec.length_scale).powi(2);
        let density: Vec<f64> = grid
            .frequencies()
            .iter()
            .map(|k| (-c * k.iter().map(|x| x * x).sum::<f64>()).exp())
            .collect();
        let total: f64 = density.iter().sum();
        let var = spec.amplitude * spec.amplitude;
        let scale = density
            .iter()
            .map(|s| (s / total * var / 2.0).sqrt())
            .collect();
        Ok(Self { grid, scale })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// One real field, row-major.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let g: Vec<Complex64> = self
            .scale
            .iter()
            .map(|&s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * s, im * s)
            })
            .collect();
        let norm = std::f64::consts::FRAC_1_SQRT_2;
        let mut a: Vec<Complex64> = (0..g.len())
            .map(|c| (g[c] + g[self.grid.mirror(c)].conj()) * norm)
            .collect();
        fftn(&mut a, self.grid, true).expect("grid validated");
        let n = self.grid.cells() as f64;
        a.into_iter().map(|v| v.re * n).collect()
    }
}

/// `count` independent fields drawn from one seeded stream.
pub fn sample_grf(spec: &GrfSpec, seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
    let sampler = GrfSampler::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sampler.sample(&mut rng)).collect())
}
