use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DatagenError, Result};
use crate::grf::GrfSpec;
use crate::spectral::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemId {
    Lv,
    Bz,
    Gs,
    Burgers,
}

impl SystemId {
    pub const ALL: [SystemId; 4] = [Self::Lv, Self::Bz, Self::Gs, Self::Burgers];

    pub fn name(self) -> &'static str {
        match self {
            Self::Lv => "lv",
            Self::Bz => "bz",
            Self::Gs => "gs",
            Self::Burgers => "burgers",
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemId {
    type Err = DatagenError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| DatagenError::Spec(format!("unknown system `{s}`")))
    }
}

/// Reaction terms and diffusivities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum Physics {
    /// `u' = D_u u'' + a u - b u v`, `v' = D_v v'' + c u v - d v`.
    Lv {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        d_u: f64,
        d_v: f64,
    },
    /// `u' = e1 u'' + u + v - u v - u^2`, `v' = e2 v'' + w - v - u v`, `w' = e3 w'' + u - w`.
    Bz { eps1: f64, eps2: f64, eps3: f64 },
    /// `u' = D_u lap u - u v^2 + F (1 - u)`, `v' = D_v lap v + u v^2 - (F + k) v`.
    Gs { d_u: f64, d_v: f64, f: f64, k: f64 },
    /// `u' = nu u'' - u u'`.
    Burgers { nu: f64 },
}

impl Physics {
    pub fn id(&self) -> SystemId {
        match self {
            Self::Lv { .. } => SystemId::Lv,
            Self::Bz { .. } => SystemId::Bz,
            Self::Gs { .. } => SystemId::Gs,
            Self::Burgers { .. } => SystemId::Burgers,
        }
    }

    pub fn diffusivities(&self) -> Vec<f64> {
        match *self {
            Self::Lv { d_u, d_v, .. } | Self::Gs { d_u, d_v, .. } => vec![d_u, d_v],
            Self::Bz { eps1, eps2, eps3 } => vec![eps1, eps2, eps3],
            Self::Burgers { nu } => vec![nu],
        }
    }
}

/// Random-field initial conditions.
///
/// `lv`: `max(g + shift, 0)` per species. `gs`: `u = 1 - scale g+`, `v = scale g+` from a
/// single field. `bz` and `burgers` use `g` directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    pub length_scale: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub shift: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub physics: Physics,
    pub horizon: f64,
    pub dt: f64,
    /// Stored points per axis.
    pub resolution: usize,
    /// Solve on `resolution * fine_factor` points per axis, then subsample.
    pub fine_factor: usize,
    /// Physical side length of the periodic domain.
    pub domain_length: f64,
    pub initial: InitialCondition,
}

impl SystemSpec {
    pub fn default_for(id: SystemId) -> Self {
        match id {
            SystemId::Lv => Self {
                physics: Physics::Lv {
                    a: 0.01,
                    b: 0.01,
                    c: 0.01,
                    d: 0.01,
                    d_u: 0.01,
                    d_v: 0.01,
                },
                horizon: 20.0,
                dt: 0.01,
                resolution: 256,
                fine_factor: 4,
                domain_length: 1.0,
                initial: InitialCondition {
                    length_scale: 0.1,
                    amplitude: 1.0,
                    shift: 2.0,
                    scale: 1.0,
                },
            },
            SystemId::Bz => Self {
                physics: Physics::Bz {
                    eps1: 1e-2,
                    eps2: 1e-2,
                    eps3: 5e-3,
                },
                horizon: 0.5,
                dt: 1e-3,
                resolution: 256,
                fine_factor: 4,
                domain_length: 1.0,
                initial: InitialCondition {
                    length_scale: 0.03,
                    amplitude: 0.5,
                    shift: 0.0,
                    scale: 1.0,
                },
            },
            SystemId::Gs => Self {
                physics: Physics::Gs {
                    d_u: 0.12,
                    d_v: 0.06,
                    f: 0.054,
                    k: 0.063,
                },
                horizon: 20.0,
                dt: 0.05,
                resolution: 64,
                fine_factor: 1,
                domain_length: 64.0,
                initial: InitialCondition {
                    length_scale: 0.1,
                    amplitude: 1.0,
                    shift: 0.0,
                    scale: 0.5,
                },
            },
            SystemId::Burgers => Self {
                physics: Physics::Burgers { nu: 0.01 },
                horizon: 1.0,
                dt: 2e-4,
                resolution: 256,
                fine_factor: 4,
                domain_length: 1.0,
                initial: InitialCondition {
                    length_scale: 0.1,
                    amplitude: 0.5,
                    shift: 0.0,
                    scale: 1.0,
                },
            },
        }
    }

    pub fn id(&self) -> SystemId {
        self.physics.id()
    }

    pub fn dims(&self) -> usize {
        match self.id() {
            SystemId::Gs => 2,
            _ => 1,
        }
    }

    pub fn processes(&self) -> usize {
        self.physics.diffusivities().len()
    }

    pub fn channel_names(&self) -> Vec<&'static str> {
        match self.id() {
            SystemId::Bz => vec!["u", "v", "w"],
            SystemId::Burgers => vec!["u"],
            _ => vec!["u", "v"],
        }
    }

    /// Number of steps of size `dt` covering the horizon.
    pub fn steps(&self) -> Result<usize> {
        let ratio = self.horizon / self.dt;
        let steps = ratio.round();
        if !(self.dt > 0.0) || !(self.horizon > 0.0) || (ratio - steps).abs() > 1e-9 * ratio {
            return Err(DatagenError::Spec(format!(
                "horizon {} is not a positive multiple of dt {}",
                self.horizon, self.dt
            )));
        }
        Ok(steps as usize)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.resolution, self.dims())
    }

    pub fn fine_grid(&self) -> Result<Grid> {
        if self.fine_factor == 0 || !self.fine_factor.is_power_of_two() {
            return Err(DatagenError::Spec(format!(
                "fine factor {} is not a power of two",
                self.fine_factor
            )));
        }
        Grid::new(self.resolution * self.fine_factor, self.dims())
    }

    pub fn grf(&self, resolution: usize) -> GrfSpec {
        GrfSpec {
            dims: self.dims(),
            resolution,
            length_scale: self.initial.length_scale,
            amplitude: self.initial.amplitude,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.steps()?;
        self.grid()?;
        self.fine_grid()?;
        self.grf(self.resolution).validate()?;
        if self.physics.diffusivities().iter().any(|d| !(*d >= 0.0)) {
            return Err(DatagenError::Spec(
                "diffusivities must be nonnegative".into(),
            ));
        }
        if !(self.domain_length > 0.0) {
            return Err(DatagenError::Spec(format!(
                "domain length must be positive, got {}",
                self.domain_length
            )));
        }
        Ok(())
    }
}
