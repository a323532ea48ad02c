use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Gru,
    Attention,
    Skip,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixKind {
    Linear,
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectKind {
    Add,
    ConcatReduce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Gelu,
    Tanh,
}

/// `Compol` couples one branch per process; `FnoConcat` is a single branch over
/// the channel-concatenated processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Compol,
    FnoConcat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttentionConfig {
    pub heads: usize,
    /// Key width; `None` uses the latent width.
    pub key_width: Option<usize>,
    /// Attend over the latents of every layer so far instead of the current one.
    pub history: bool,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        Self {
            heads: 1,
            key_width: None,
            history: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompolConfig {
    pub architecture: Architecture,
    /// Channel count of each process (used for both input and output).
    pub channels: Vec<usize>,
    pub layers: usize,
    pub width: usize,
    /// Retained modes per spatial axis, in grid-axis order; the last axis is real-transformed.
    pub modes: Vec<usize>,
    pub aggregation: Aggregation,
    pub mix: MixKind,
    pub inject: InjectKind,
    pub activation: Activation,
    pub attention: AttentionConfig,
    pub coords: bool,
    pub head_width: usize,
    pub seed: u64,
}

impl Default for CompolConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::Compol,
            channels: vec![1, 1],
            layers: 4,
            width: 64,
            modes: vec![16],
            aggregation: Aggregation::Attention,
            mix: MixKind::Linear,
            inject: InjectKind::Add,
            activation: Activation::Gelu,
            attention: AttentionConfig::default(),
            coords: true,
            head_width: 128,
            seed: 0,
        }
    }
}

impl CompolConfig {
    pub fn processes(&self) -> usize {
        self.channels.len()
    }

    pub fn dims(&self) -> usize {
        self.modes.len()
    }

    pub fn key_width(&self) -> usize {
        self.attention.key_width.unwrap_or(self.width)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CoreError::Config(msg));
        if self.channels.is_empty() || self.channels.contains(&0) {
            return bad(format!("process channels {:?}", self.channels));
        }
        if self.layers == 0 || self.width == 0 || self.head_width == 0 {
            return bad("layers, width and head width must be positive".into());
        }
        if !(1..=2).contains(&self.modes.len()) || self.modes.contains(&0) {
            return bad(format!(
                "modes {:?} must name 1 or 2 positive counts",
                self.modes
            ));
        }
        if self.aggregation == Aggregation::Attention {
            let h = self.attention.heads;
            if h == 0 || self.key_width() == 0 || self.key_width() % h != 0 || self.width % h != 0 {
                return bad(format!(
                    "{h} heads must divide key width {} and width {}",
                    self.key_width(),
                    self.width
                ));
            }
        }
        Ok(())
    }

    /// Checks that the retained modes fit a grid.
    pub fn check_grid(&self, grid: &[usize]) -> Result<()> {
        if grid.len() != self.dims() {
            return Err(CoreError::Config(format!(
                "grid {grid:?} has {} axes, modes {:?} expect {}",
                grid.len(),
                self.modes,
                self.dims()
            )));
        }
        crate::layers::check_modes(&self.modes, grid)
    }

    /// Config of the single network that actually runs: itself for `Compol`, or one
    /// uncoupled branch over the concatenated channels for `FnoConcat`.
    pub fn network(&self) -> CompolConfig {
        match self.architecture {
            Architecture::Compol => self.clone(),
            Architecture::FnoConcat => CompolConfig {
                architecture: Architecture::Compol,
                channels: vec![self.channels.iter().sum()],
                aggregation: Aggregation::None,
                ..self.clone()
            },
        }
    }
}
