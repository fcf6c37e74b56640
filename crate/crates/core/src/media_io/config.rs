use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::degradation::DegradationConfig;
use crate::losses::LossWeights;
use crate::networks::ModelConfig;
use crate::training::{OptimizerConfig, TrainingConfig};
use crate::{Error, Result};

pub const SUPPORTED_RESOLUTIONS: [usize; 4] = [64, 128, 256, 512];

fn default_keypoints() -> usize {
    15
}

/// Complete run configuration. Only `resolution` is required in files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub resolution: usize,
    #[serde(default = "default_keypoints")]
    pub keypoint_count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub loss_weights: LossWeights,
    #[serde(default)]
    pub degradation: DegradationConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub training: TrainingConfig,
}

impl Config {
    /// Defaults at the given resolution.
    pub fn new(resolution: usize) -> Self {
        Self {
            resolution,
            keypoint_count: default_keypoints(),
            seed: 0,
            loss_weights: LossWeights::default(),
            degradation: DegradationConfig::default(),
            optimizer: OptimizerConfig::default(),
            model: ModelConfig::default(),
            training: TrainingConfig::default(),
        }
    }

    /// Side length of the motion and deepest feature maps.
    pub fn feature_resolution(&self) -> usize {
        self.resolution / 4
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution % 16 != 0 {
            return Err(Error::config("resolution", "resolution must be divisible by 16"));
        }
        if !SUPPORTED_RESOLUTIONS.contains(&self.resolution) {
            return Err(Error::config("resolution", "resolution must be one of 64, 128, 256, 512"));
        }
        if self.keypoint_count == 0 {
            return Err(Error::config("keypoint_count", "keypoint_count must be at least 1"));
        }
        self.loss_weights.validate()?;
        self.degradation.validate()?;
        self.optimizer.validate()?;
        self.model.validate()?;
        self.training.validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            Error::config(offending_key(&message), message)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Pulls the backquoted field name out of a deserializer message.
fn offending_key(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .filter(|k| !k.is_empty())
        .unwrap_or("<document>")
        .to_string()
}

/// Reads and validates a TOML configuration file.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Config::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(r: Result<Config>) -> (String, String) {
        match r {
            Err(Error::Config { key, message }) => (key, message),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = Config::from_toml_str("resolution = 64\n").unwrap();
        assert_eq!(cfg, Config::new(64));
        assert_eq!(cfg.keypoint_count, 15);
        assert_eq!(cfg.loss_weights.head_pose, 20.0);
        assert_eq!(cfg.degradation.stage_count, 2);
        assert_eq!(cfg.optimizer.beta1, 0.5);
        assert_eq!(cfg.feature_resolution(), 16);
    }

    #[test]
    fn invariant_violations_name_the_key() {
        let (key, msg) = key_of(Config::from_toml_str("resolution = 100"));
        assert_eq!(key, "resolution");
        assert_eq!(msg, "resolution must be divisible by 16");
        assert_eq!(key_of(Config::from_toml_str("resolution = 48")).0, "resolution");
        let (key, _) = key_of(Config::from_toml_str("resolution = 64\n[loss_weights]\nperceptual = -1.0"));
        assert_eq!(key, "loss_weights.perceptual");
        let (key, _) = key_of(Config::from_toml_str("resolution = 64\nkeypoint_count = 0"));
        assert_eq!(key, "keypoint_count");
    }

    #[test]
    fn unknown_and_missing_keys_are_rejected() {
        assert_eq!(key_of(Config::from_toml_str("resolution = 64\nlearning_rat = 1")).0, "learning_rat");
        assert_eq!(key_of(Config::from_toml_str("keypoint_count = 10")).0, "resolution");
        let nested = "resolution = 64\n[degradation]\nstage_cont = 1";
        assert_eq!(key_of(Config::from_toml_str(nested)).0, "stage_cont");
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = Config::new(128);
        cfg.training.dataset = Some("data/clips".into());
        cfg.degradation = DegradationConfig::half_resolution_round_trip();
        let back = Config::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }
}
