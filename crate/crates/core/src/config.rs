//! Run configuration, read from TOML.
//!
//! ```toml
//! [model]
//! variant = "vtsrcnn"
//! residual_blocks = 5
//! channels = 64
//!
//! [train]
//! seed = 7
//! batch_size = 12
//!
//! [content]
//! epochs = 50
//!
//! [gan]
//! epochs = 50
//! lambda = 0.01
//! ```
//!
//! Every field has a default; the defaults are the full-size networks with
//! short epoch budgets.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::DEFAULT_LAMBDA;
use crate::models::{DiscriminatorConfig, GeneratorConfig, Variant};
use crate::optim::LrSchedule;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub variant: Variant,
    pub residual_blocks: usize,
    pub channels: usize,
    pub discriminator_channels: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            variant: Variant::Tsrcnn,
            residual_blocks: 5,
            channels: 64,
            discriminator_channels: 64,
        }
    }
}

impl ModelSection {
    pub fn generator(&self) -> GeneratorConfig {
        self.variant
            .config()
            .with_size(self.residual_blocks, self.channels)
    }

    pub fn discriminator(&self) -> DiscriminatorConfig {
        DiscriminatorConfig {
            base_channels: self.discriminator_channels,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            seed: 0,
            batch_size: 12,
        }
    }
}

/// Content-loss pre-training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContentSection {
    pub epochs: usize,
    /// Stops the phase early after this many optimizer steps.
    pub max_steps: Option<usize>,
    pub lr_start: f64,
    pub lr_end: f64,
}

impl Default for ContentSection {
    fn default() -> Self {
        ContentSection {
            epochs: 20,
            max_steps: None,
            lr_start: 1e-4,
            lr_end: 1e-6,
        }
    }
}

/// Adversarial fine-tuning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanSection {
    pub epochs: usize,
    pub max_steps: Option<usize>,
    pub lambda: f64,
    pub lr_start: f64,
    pub lr_end: f64,
    /// Discriminator (SGD) learning rates; default to the generator's.
    pub d_lr_start: Option<f64>,
    pub d_lr_end: Option<f64>,
}

impl Default for GanSection {
    fn default() -> Self {
        GanSection {
            epochs: 20,
            max_steps: None,
            lambda: DEFAULT_LAMBDA,
            lr_start: 1e-4,
            lr_end: 1e-6,
            d_lr_start: None,
            d_lr_end: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub train: TrainSection,
    pub content: ContentSection,
    pub gan: GanSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.model.generator().validate()?;
        if self.model.discriminator_channels == 0 {
            return Err(Error::Config(
                "discriminator_channels must be positive".into(),
            ));
        }
        if self.train.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        let rates = [
            ("content.lr_start", self.content.lr_start),
            ("content.lr_end", self.content.lr_end),
            ("gan.lr_start", self.gan.lr_start),
            ("gan.lr_end", self.gan.lr_end),
            ("gan.d_lr_start", self.gan.d_lr_start.unwrap_or(1.0)),
            ("gan.d_lr_end", self.gan.d_lr_end.unwrap_or(1.0)),
        ];
        for (name, v) in rates {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.gan.lambda >= 0.0 && self.gan.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "gan.lambda must be non-negative, got {}",
                self.gan.lambda
            )));
        }
        Ok(())
    }

    pub fn content_schedule(&self) -> LrSchedule {
        LrSchedule {
            start: self.content.lr_start,
            end: self.content.lr_end,
            epochs: self.content.epochs,
        }
    }

    pub fn generator_gan_schedule(&self) -> LrSchedule {
        LrSchedule {
            start: self.gan.lr_start,
            end: self.gan.lr_end,
            epochs: self.gan.epochs,
        }
    }

    pub fn discriminator_schedule(&self) -> LrSchedule {
        LrSchedule {
            start: self.gan.d_lr_start.unwrap_or(self.gan.lr_start),
            end: self.gan.d_lr_end.unwrap_or(self.gan.lr_end),
            epochs: self.gan.epochs,
        }
    }
}
