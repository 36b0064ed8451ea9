//! Run configuration shared by the library entry points and the CLI.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::DEFAULT_COUNTER_LIMIT;
use crate::mask::PixelLabel;
use crate::mixture::MixtureConfig;
use crate::segmenter::DepthRange;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub counter_limit: i8,
    pub initial_label: PixelLabel,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            counter_limit: DEFAULT_COUNTER_LIMIT,
            initial_label: PixelLabel::Background,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// 0 picks the machine's available parallelism.
    pub workers: usize,
    pub pipeline: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            workers: 0,
            pipeline: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationConfig {
    pub dilation_radius: usize,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self { dilation_radius: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Leading frames left out of the aggregate metrics.
    pub warmup_frames: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { warmup_frames: 30 }
    }
}

/// Every tunable of a segmentation run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub color: MixtureConfig,
    pub depth: MixtureConfig,
    pub augmented: MixtureConfig,
    /// Depth span mapped onto 0–255 for the augmented channel.
    pub augmented_depth_range: DepthRange,
    pub fusion: FusionConfig,
    pub engine: EngineConfig,
    pub registration: RegistrationConfig,
    pub evaluation: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            color: MixtureConfig::color(),
            depth: MixtureConfig::depth(),
            augmented: MixtureConfig::color(),
            augmented_depth_range: DepthRange::default(),
            fusion: FusionConfig::default(),
            engine: EngineConfig::default(),
            registration: RegistrationConfig::default(),
            evaluation: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, cfg) in [("color", &self.color), ("depth", &self.depth), ("augmented", &self.augmented)] {
            cfg.validate().map_err(|e| Error::Config(format!("{name}: {e}")))?;
        }
        self.augmented_depth_range.validate()?;
        if self.fusion.counter_limit <= 0 {
            return Err(Error::Config(format!(
                "fusion.counter_limit must be positive, got {}",
                self.fusion.counter_limit
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                path: path.into(),
                source,
            },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| Error::Json {
            path: "<config>".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
