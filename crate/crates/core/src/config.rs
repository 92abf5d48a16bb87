//! The run configuration document: one JSON file covering every stage,
//! with unknown keys rejected so a typo cannot silently fall back to a
//! default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::anc::AncConfig;
use crate::model::PpnetConfig;
use crate::stft::StftConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioSection {
    /// Clips with any other rate are rejected by the featurize stage.
    pub expected_sample_rate: u32,
}

impl Default for AudioSection {
    fn default() -> Self {
        Self {
            expected_sample_rate: 48_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationSection {
    /// Relative intensity threshold for vowel detection.
    pub ratio: f64,
}

impl Default for SegmentationSection {
    fn default() -> Self {
        Self { ratio: 0.25 }
    }
}

/// Adaptive noise cancellation; off unless a reference signal exists.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AncSection {
    pub enabled: bool,
    pub taps: usize,
    pub step: f64,
    pub regularizer: f64,
}

impl Default for AncSection {
    fn default() -> Self {
        let cfg = AncConfig::default();
        Self {
            enabled: false,
            taps: cfg.taps,
            step: cfg.step,
            regularizer: cfg.regularizer,
        }
    }
}

impl AncSection {
    pub fn to_anc_config(&self) -> AncConfig {
        AncConfig {
            taps: self.taps,
            step: self.step,
            regularizer: self.regularizer,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub out_dir: Option<String>,
    pub manifest: Option<String>,
    pub features_dir: Option<String>,
    pub checkpoint: Option<String>,
}

/// The whole pipeline configuration. Every section is optional in the
/// file; missing sections take the documented defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub audio: AudioSection,
    pub segmentation: SegmentationSection,
    pub anc: AncSection,
    pub stft: StftConfig,
    pub model: PpnetConfig,
    pub paths: PathsSection,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path.as_ref())?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.segmentation.ratio > 0.0 && self.segmentation.ratio < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "segmentation.ratio {} must be in (0, 1)",
                self.segmentation.ratio
            )));
        }
        self.stft
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.model
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.model.input_frames != self.stft.n_frames
            || self.model.input_ranges != self.stft.n_ranges
        {
            return Err(ConfigError::Invalid(format!(
                "model input {}x{} does not match stft output {}x{}",
                self.model.input_frames,
                self.model.input_ranges,
                self.stft.n_frames,
                self.stft.n_ranges
            )));
        }
        Ok(())
    }
}
