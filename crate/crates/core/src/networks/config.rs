use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Architecture hyperparameters shared by the networks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Gaussian heatmap width in normalized coordinates.
    pub heatmap_sigma: f64,
    /// Softmax temperature of the keypoint score maps.
    pub keypoint_temperature: f64,
    /// Regress per-keypoint Jacobians; identity otherwise.
    pub use_jacobians: bool,
    /// Warp every encoder scale, not only the deepest one.
    pub warp_all_scales: bool,
    /// Channel width of the first encoder stage.
    pub base_channels: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            heatmap_sigma: 0.1,
            keypoint_temperature: 0.1,
            use_jacobians: true,
            warp_all_scales: true,
            base_channels: 16,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.heatmap_sigma.is_finite() && self.heatmap_sigma > 0.0) {
            return Err(Error::config("model.heatmap_sigma", "must be positive"));
        }
        if !(self.keypoint_temperature.is_finite() && self.keypoint_temperature > 0.0) {
            return Err(Error::config("model.keypoint_temperature", "must be positive"));
        }
        if self.base_channels < 4 {
            return Err(Error::config("model.base_channels", "must be at least 4"));
        }
        Ok(())
    }
}
