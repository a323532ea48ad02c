use compol_core::{Aggregation, CompolConfig};
use compol_datagen::{generate_samples, FieldDataset, SystemId, SystemSpec};

/// A short, coarse Lotka-Volterra problem that generates in milliseconds.
pub fn lv_spec() -> SystemSpec {
    let mut spec = SystemSpec::default_for(SystemId::Lv);
    spec.resolution = 32;
    spec.fine_factor = 2;
    spec.horizon = 2.0;
    spec.dt = 0.05;
    spec
}

pub fn lv_data(n: usize, seed: u64) -> FieldDataset {
    generate_samples(&lv_spec(), n, seed).unwrap()
}

pub fn tiny(aggregation: Aggregation) -> CompolConfig {
    CompolConfig {
        channels: vec![1, 1],
        layers: 2,
        width: 8,
        modes: vec![4],
        aggregation,
        head_width: 16,
        seed: 5,
        ..CompolConfig::default()
    }
}
