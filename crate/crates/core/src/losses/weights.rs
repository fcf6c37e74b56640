use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scalar weights of the loss families in the generator objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub keypoint: f64,
    pub head_pose: f64,
    pub expression: f64,
    pub equivariance: f64,
    pub deformation: f64,
    pub perceptual: f64,
    pub adversarial: f64,
    pub feature_matching: f64,
    /// Strength of the expression-magnitude prior inside the deformation loss.
    pub expression_prior: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            keypoint: 10.0,
            head_pose: 20.0,
            expression: 5.0,
            equivariance: 10.0,
            deformation: 10.0,
            perceptual: 10.0,
            adversarial: 1.0,
            feature_matching: 10.0,
            expression_prior: 0.1,
        }
    }
}

impl LossWeights {
    pub fn named(&self) -> [(&'static str, f64); 8] {
        [
            ("keypoint", self.keypoint),
            ("head_pose", self.head_pose),
            ("expression", self.expression),
            ("equivariance", self.equivariance),
            ("deformation", self.deformation),
            ("perceptual", self.perceptual),
            ("adversarial", self.adversarial),
            ("feature_matching", self.feature_matching),
        ]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            keypoint: self.keypoint * factor,
            head_pose: self.head_pose * factor,
            expression: self.expression * factor,
            equivariance: self.equivariance * factor,
            deformation: self.deformation * factor,
            perceptual: self.perceptual * factor,
            adversarial: self.adversarial * factor,
            feature_matching: self.feature_matching * factor,
            expression_prior: self.expression_prior,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.named().into_iter().chain([("expression_prior", self.expression_prior)]);
        for (name, w) in all {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::config(
                    format!("loss_weights.{name}"),
                    format!("must be finite and >= 0, got {w}"),
                ));
            }
        }
        if self.named().iter().all(|(_, w)| *w == 0.0) {
            return Err(Error::config("loss_weights", "at least one weight must be positive"));
        }
        Ok(())
    }
}
