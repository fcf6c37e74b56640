use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Global gradient-norm ceiling applied to each network's update.
    pub grad_clip_norm: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { learning_rate: 2e-4, beta1: 0.5, beta2: 0.999, grad_clip_norm: 10.0 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::config("optimizer.learning_rate", "must be finite and >= 0"));
        }
        for (key, b) in [("optimizer.beta1", self.beta1), ("optimizer.beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(key, "must lie in [0, 1)"));
            }
        }
        if !(self.grad_clip_norm.is_finite() && self.grad_clip_norm > 0.0) {
            return Err(Error::config("optimizer.grad_clip_norm", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub steps: u64,
    pub checkpoint_every: u64,
    /// Chance of an extra undegraded source pass per pair when no teacher is set.
    pub hq_probability: f64,
    /// Dataset root (clip directories, optional manifest).
    pub dataset: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Largest source/driving frame distance; `None` samples over the whole clip.
    pub max_frame_gap: Option<usize>,
    /// Threads preparing batch items; forced to 1 in deterministic mode.
    pub loader_workers: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            batch_size: 4,
            steps: 2000,
            checkpoint_every: 500,
            hq_probability: 0.25,
            dataset: None,
            output_dir: PathBuf::from("runs/adasr"),
            max_frame_gap: None,
            loader_workers: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("training.batch_size", "must be at least 1"));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::config("training.checkpoint_every", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.hq_probability) {
            return Err(Error::config("training.hq_probability", "must lie in [0, 1]"));
        }
        if self.max_frame_gap == Some(0) {
            return Err(Error::config("training.max_frame_gap", "must be at least 1"));
        }
        if self.loader_workers == 0 {
            return Err(Error::config("training.loader_workers", "must be at least 1"));
        }
        Ok(())
    }
}
