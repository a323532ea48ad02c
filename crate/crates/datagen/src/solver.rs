//! Fourth-order exponential time differencing Runge-Kutta on periodic grids.
//!
//! Diffusion is integrated exactly per Fourier mode; reaction and advection terms are
//! evaluated pseudo-spectrally in physical space.

use num_complex::Complex64;

use crate::error::{DatagenError, Result};
use crate::phi::{phi_coefficients, DEFAULT_CONTOUR_POINTS};
use crate::spectral::{to_physical, to_spectral, Grid};
use crate::system::{Physics, SystemSpec};

/// What [`Etdrk4::solve`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    Final,
    /// The initial state and every `n`-th step.
    Every(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `[frame][process][cell]`.
    pub states: Vec<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn last(&self) -> &[Vec<f64>] {
        self.states.last().expect("at least one frame")
    }
}

/// Per-mode update weights of one process.
struct Weights {
    e: Vec<f64>,
    e2: Vec<f64>,
    q: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
}

impl Weights {
    fn new(lin: &[f64], dt: f64) -> Self {
        let z: Vec<Complex64> = lin.iter().map(|&l| Complex64::new(l * dt, 0.0)).collect();
        let half: Vec<Complex64> = z.iter().map(|v| v * 0.5).collect();
        let full = phi_coefficients(&z, DEFAULT_CONTOUR_POINTS);
        let h = phi_coefficients(&half, DEFAULT_CONTOUR_POINTS);
        let n = lin.len();
        let mut w = Self {
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        for k in 0..n {
            let (p1, p2, p3) = (full.phi1[k].re, full.phi2[k].re, full.phi3[k].re);
            w.e.push(full.phi0[k].re);
            w.e2.push(h.phi0[k].re);
            w.q.push(0.5 * dt * h.phi1[k].re);
            w.f1.push(dt * (p1 - 3.0 * p2 + 4.0 * p3));
            w.f2.push(dt * (p2 - 2.0 * p3));
            w.f3.push(dt * (4.0 * p3 - p2));
        }
        w
    }
}

pub struct Etdrk4 {
    physics: Physics,
    grid: Grid,
    dt: f64,
    steps: usize,
    weights: Vec<Weights>,
    /// `-i kx / 2` with the two-thirds dealiasing mask, for the Burgers flux.
    flux: Vec<Complex64>,
    nonlinear: bool,
}

impl Etdrk4 {
    /// Solver for `spec` on an `n`-point grid per axis.
    pub fn new(spec: &SystemSpec, n: usize) -> Result<Self> {
        spec.validate()?;
        let grid = Grid::new(n, spec.dims())?;
        let k2 = grid.squared_wavenumbers(spec.domain_length);
        let weights = spec
            .physics
            .diffusivities()
            .iter()
            .map(|&d| {
                let lin: Vec<f64> = k2.iter().map(|&k| -d * k).collect();
                Weights::new(&lin, spec.dt)
            })
            .collect();
        let s = 2.0 * std::f64::consts::PI / spec.domain_length;
        let flux = grid
            .frequencies()
            .iter()
            .map(|k| {
                let kx = k[grid.dims - 1];
                if 3.0 * kx.abs() < n as f64 {
                    Complex64::new(0.0, -0.5 * s * kx)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok(Self {
            physics: spec.physics.clone(),
            grid,
            dt: spec.dt,
            steps: spec.steps()?,
            weights,
            flux,
            nonlinear: true,
        })
    }

    /// Drops reaction and advection terms, leaving pure diffusion.
    pub fn without_nonlinearity(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn reaction(&self, u: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let cells = u[0].len();
        let mut out = vec![vec![0.0; cells]; u.len()];
        match self.physics {
            Physics::Lv { a, b, c, d, .. } => {
                for i in 0..cells {
                    let (x, y) = (u[0][i], u[1][i]);
                    out[0][i] = a * x - b * x * y;
                    out[1][i] = c * x * y - d * y;
                }
            }
            Physics::Bz { .. } => {
                for i in 0..cells {
                    let (x, y, z) = (u[0][i], u[1][i], u[2][i]);
                    out[0][i] = x + y - x * y - x * x;
                    out[1][i] = z - y - x * y;
                    out[2][i] = x - z;
                }
            }
            Physics::Gs { f, k, .. } => {
                for i in 0..cells {
                    let (x, y) = (u[0][i], u[1][i]);
                    let uvv = x * y * y;
                    out[0][i] = -uvv + f * (1.0 - x);
                    out[1][i] = uvv - (f + k) * y;
                }
            }
            Physics::Burgers { .. } => {
                for i in 0..cells {
                    out[0][i] = u[0][i] * u[0][i];
                }
            }
        }
        out
    }

    /// Nonlinear right-hand side in spectral space.
    fn rhs(&self, v: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
        if !self.nonlinear {
            return Ok(v
                .iter()
                .map(|x| vec![Complex64::new(0.0, 0.0); x.len()])
                .collect());
        }
        let u: Vec<Vec<f64>> = v
            .iter()
            .map(|x| to_physical(x, self.grid))
            .collect::<Result<_>>()?;
        let mut out: Vec<Vec<Complex64>> = self
            .reaction(&u)
            .iter()
            .map(|r| to_spectral(r, self.grid))
            .collect::<Result<_>>()?;
        if let Physics::Burgers { .. } = self.physics {
            for (o, f) in out[0].iter_mut().zip(&self.flux) {
                *o *= f;
            }
        }
        Ok(out)
    }

    fn stage(&self, base: &[Vec<Complex64>], n: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        base.iter()
            .zip(n)
            .zip(&self.weights)
            .map(|((x, y), w)| {
                (0..x.len())
                    .map(|k| x[k] * w.e2[k] + y[k] * w.q[k])
                    .collect()
            })
            .collect()
    }

    fn step(&self, v: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
        let nv = self.rhs(v)?;
        let a = self.stage(v, &nv);
        let na = self.rhs(&a)?;
        let b = self.stage(v, &na);
        let nb = self.rhs(&b)?;
        let lead: Vec<Vec<Complex64>> = nb
            .iter()
            .zip(&nv)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * 2.0 - q).collect())
            .collect();
        let c = self.stage(&a, &lead);
        let nc = self.rhs(&c)?;
        Ok((0..v.len())
            .map(|m| {
                let w = &self.weights[m];
                (0..v[m].len())
                    .map(|k| {
                        v[m][k] * w.e[k]
                            + nv[m][k] * w.f1[k]
                            + (na[m][k] + nb[m][k]) * (2.0 * w.f2[k])
                            + nc[m][k] * w.f3[k]
                    })
                    .collect()
            })
            .collect())
    }

    /// Integrates `u0` (one row-major field per process) over the horizon.
    pub fn solve(&self, u0: &[Vec<f64>], record: Record) -> Result<Trajectory> {
        if u0.len() != self.weights.len() || u0.iter().any(|u| u.len() != self.grid.cells()) {
            return Err(DatagenError::Spec(format!(
                "expected {} fields of {} cells",
                self.weights.len(),
                self.grid.cells()
            )));
        }
        let every = match record {
            Record::Final => 0,
            Record::Every(0) => {
                return Err(DatagenError::Spec(
                    "recording interval must be positive".into(),
                ))
            }
            Record::Every(n) => n,
        };
        let mut v: Vec<Vec<Complex64>> = u0
            .iter()
            .map(|u| to_spectral(u, self.grid))
            .collect::<Result<_>>()?;
        let mut traj = Trajectory {
            times: Vec::new(),
            states: Vec::new(),
        };
        if every > 0 {
            traj.times.push(0.0);
            traj.states.push(u0.to_vec());
        }
        for s in 1..=self.steps {
            v = self.step(&v)?;
            if v.iter()
                .flatten()
                .any(|c| !(c.re.is_finite() && c.im.is_finite()))
            {
                return Err(DatagenError::BlowUp {
                    step: s,
                    time: s as f64 * self.dt,
                });
            }
            if (every > 0 && s % every == 0) || (every == 0 && s == self.steps) {
                traj.times.push(s as f64 * self.dt);
                traj.states.push(
                    v.iter()
                        .map(|x| to_physical(x, self.grid))
                        .collect::<Result<_>>()?,
                );
            }
        }
        Ok(traj)
    }
}

/// One-shot solve on the grid implied by the field length.
pub fn etdrk4_solve(spec: &SystemSpec, u0: &[Vec<f64>], record: Record) -> Result<Trajectory> {
    let cells = u0
        .first()
        .map(|u| u.len())
        .ok_or_else(|| DatagenError::Spec("no initial fields".into()))?;
    let n = match spec.dims() {
        1 => cells,
        _ => (cells as f64).sqrt().round() as usize,
    };
    Etdrk4::new(spec, n)?.solve(u0, record)
}
