use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use compol_core::{Aggregation, Architecture, CompolConfig};
use compol_datagen::SystemSpec;
use compol_train::TrainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub resolution: usize,
    pub seed: u64,
}

/// Defaults for `--data` and `--out`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub data: DataConfig,
    pub model: CompolConfig,
    pub train: TrainConfig,
    #[serde(default)]
    pub paths: PathsConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.system
            .validate()
            .map_err(|e| CliError::Usage(format!("system: {e}")))?;
        self.model
            .validate()
            .map_err(|e| CliError::Usage(format!("model: {e}")))?;
        if self.data.resolution != self.system.resolution {
            return Err(CliError::Usage(format!(
                "data.resolution {} differs from system.resolution {}",
                self.data.resolution, self.system.resolution
            )));
        }
        if self.model.processes() != self.system.processes() {
            return Err(CliError::Usage(format!(
                "model has {} processes, system `{}` has {}",
                self.model.processes(),
                self.system.id(),
                self.system.processes()
            )));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(self)?)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    CompolRnn,
    CompolAtn,
    CompolSkip,
    FnoC,
}

impl ModelChoice {
    pub fn apply(self, cfg: &mut CompolConfig) {
        let (architecture, aggregation) = match self {
            Self::CompolRnn => (Architecture::Compol, Aggregation::Gru),
            Self::CompolAtn => (Architecture::Compol, Aggregation::Attention),
            Self::CompolSkip => (Architecture::Compol, Aggregation::Skip),
            Self::FnoC => (Architecture::FnoConcat, Aggregation::None),
        };
        cfg.architecture = architecture;
        cfg.aggregation = aggregation;
    }
}

/// Short label used in run metadata and plot tables.
pub fn model_label(cfg: &CompolConfig) -> &'static str {
    match (cfg.architecture, cfg.aggregation) {
        (Architecture::FnoConcat, _) => "fno-c",
        (_, Aggregation::Gru) => "compol-rnn",
        (_, Aggregation::Attention) => "compol-atn",
        (_, Aggregation::Skip) => "compol-skip",
        (_, Aggregation::None) => "fno-independent",
    }
}
