use serde::{Deserialize, Serialize};

use crate::media_io::ResizeKernel;
use crate::{Error, Result};

/// Random ranges for one down/noise/compress/up stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageConfig {
    pub downscale_factor_range: [f64; 2],
    pub resize_kernels: Vec<ResizeKernel>,
    /// Standard deviation range on the `[0, 1]` pixel scale.
    pub gaussian_noise_sigma_range: [f64; 2],
    /// Block-transform compression quality; 100 disables compression.
    pub compression_quality_range: [u32; 2],
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            downscale_factor_range: [1.5, 3.0],
            resize_kernels: ResizeKernel::ALL.to_vec(),
            gaussian_noise_sigma_range: [0.0, 0.08],
            compression_quality_range: [30, 90],
        }
    }
}

impl StageConfig {
    /// A stage that leaves images untouched.
    pub fn identity() -> Self {
        Self {
            downscale_factor_range: [1.0, 1.0],
            resize_kernels: vec![ResizeKernel::Bilinear],
            gaussian_noise_sigma_range: [0.0, 0.0],
            compression_quality_range: [100, 100],
        }
    }

    fn validate(&self, key: &str) -> Result<()> {
        let [f0, f1] = self.downscale_factor_range;
        if !(f0.is_finite() && f1.is_finite() && f0 >= 1.0 && f0 <= f1) {
            return Err(Error::config(
                format!("{key}.downscale_factor_range"),
                "must be ordered and >= 1",
            ));
        }
        if self.resize_kernels.is_empty() {
            return Err(Error::config(format!("{key}.resize_kernels"), "must not be empty"));
        }
        let [s0, s1] = self.gaussian_noise_sigma_range;
        if !(s0.is_finite() && s1.is_finite() && s0 >= 0.0 && s0 <= s1) {
            return Err(Error::config(
                format!("{key}.gaussian_noise_sigma_range"),
                "must be ordered and >= 0",
            ));
        }
        let [q0, q1] = self.compression_quality_range;
        if !(10 <= q0 && q0 <= q1 && q1 <= 100) {
            return Err(Error::config(
                format!("{key}.compression_quality_range"),
                "must be ordered within [10, 100]",
            ));
        }
        Ok(())
    }
}

/// Multi-stage degradation recipe applied to source images.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationConfig {
    pub stage_count: usize,
    /// Explicit per-stage settings; when empty every stage uses the defaults.
    pub stages: Vec<StageConfig>,
    /// Output side length; `None` keeps the input size.
    pub final_output_size: Option<usize>,
}

impl Default for DegradationConfig {
    fn default() -> Self {
        Self { stage_count: 2, stages: Vec::new(), final_output_size: None }
    }
}

impl DegradationConfig {
    /// Configuration under which degradation is exactly the identity.
    pub fn identity() -> Self {
        Self { stage_count: 1, stages: vec![StageConfig::identity()], final_output_size: None }
    }

    /// Additive Gaussian noise of fixed strength and nothing else.
    pub fn noise_only(sigma: f64) -> Self {
        Self {
            stage_count: 1,
            stages: vec![StageConfig { gaussian_noise_sigma_range: [sigma, sigma], ..StageConfig::identity() }],
            final_output_size: None,
        }
    }

    /// The default two-stage recipe with each stage halving the resolution
    /// exactly (e.g. 512 -> 256 -> 512).
    pub fn half_resolution_round_trip() -> Self {
        let stage = StageConfig { downscale_factor_range: [2.0, 2.0], ..StageConfig::default() };
        Self { stage_count: 2, stages: vec![stage.clone(), stage], final_output_size: None }
    }

    pub fn stage(&self, i: usize) -> StageConfig {
        self.stages.get(i).cloned().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.stages.is_empty() && self.stages.len() != self.stage_count {
            return Err(Error::config(
                "degradation.stages",
                format!("has {} entries but stage_count is {}", self.stages.len(), self.stage_count),
            ));
        }
        for i in 0..self.stage_count {
            self.stage(i).validate(&format!("degradation.stages[{i}]"))?;
        }
        if let Some(size) = self.final_output_size {
            if size < 16 || size % 16 != 0 {
                return Err(Error::config(
                    "degradation.final_output_size",
                    "must be a positive multiple of 16",
                ));
            }
        }
        Ok(())
    }
}
