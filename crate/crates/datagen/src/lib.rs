//! Gaussian-random-field initial conditions, ETDRK4 integration of periodic
//! reaction-diffusion systems, and seeded dataset generation.

pub mod dataset;
mod error;
pub mod grf;
pub mod phi;
pub mod solver;
pub mod spectral;
pub mod system;

pub use dataset::{
    generate_dataset, generate_samples, load_dataset, ChannelStats, DatasetManifest, FieldDataset,
};
pub use error::{DatagenError, Result};
pub use grf::{sample_grf, GrfSampler, GrfSpec};
pub use phi::{phi_coefficients, Phi};
pub use solver::{etdrk4_solve, Etdrk4, Record, Trajectory};
pub use system::{InitialCondition, Physics, SystemId, SystemSpec};
