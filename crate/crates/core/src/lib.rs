//! Fourier neural operator layers, cross-process aggregation and the coupled
//! multi-process operator model.

pub mod aggregation;
pub mod checkpoint;
pub mod config;
mod error;
pub mod layers;
pub mod model;
pub mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{
    Activation, Aggregation, Architecture, AttentionConfig, CompolConfig, InjectKind, MixKind,
};
pub use error::{CoreError, Result};
pub use model::{process_seed, CompolModel, ParamCount};
pub use params::{Bound, ParamStore};
