//! Learnable networks: appearance encoder, keypoint detector, pose head,
//! dense-motion predictor, modulated generator and patch discriminator,
//! plus weight storage and the checkpoint archive.

mod checkpoint;
mod config;
mod dense_motion;
mod discriminator;
mod encoder;
mod generator;
mod keypoints;
pub mod layers;
mod model;
mod perceptual;
mod pose;
mod weights;

use adasr_tensor::no_grad;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_MAGIC};
pub use config::ModelConfig;
pub use dense_motion::{DenseMotionNet, DenseMotionOutput};
pub use discriminator::{DiscriminatorOutput, MultiScaleDiscriminator, PATCH_STRIDE};
pub use encoder::{AppearanceEncoder, AppearanceFeatures};
pub use generator::Generator;
pub use keypoints::{soft_argmax, Detection, KeypointDetector};
pub use model::{
    ForwardOutput, Networks, DENSE_MOTION, DISCRIMINATOR, DISCRIMINATOR_SCALES, ENCODER, GENERATOR,
    KEYPOINT_DETECTOR, POSE_HEAD,
};
pub use perceptual::{FeatureExtractor, EXTRACTOR_SEED};
pub use pose::PoseHead;
pub use weights::{batch_statistic_buffers, NetworkWeights, WEIGHTS_VERSION};

use crate::media_io::Frame;
use crate::motion_field::{KeypointSet, MotionParams};
use crate::Result;

/// Inference-mode view of a set of networks and their weights with
/// single-frame entry points.
#[derive(Clone)]
pub struct Model {
    pub networks: Networks,
    pub weights: NetworkWeights,
}

impl Model {
    pub fn new(networks: Networks, weights: NetworkWeights) -> Self {
        Self { networks, weights }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        Ok(Self { networks: Networks::from_config(&ckpt.config)?, weights: ckpt.weights.clone() })
    }

    pub fn encode_appearance(&self, frame: &Frame) -> Result<AppearanceFeatures<f32>> {
        no_grad(|| self.networks.encode(&self.weights.generator, &frame.to_tensor()))
    }

    pub fn detect_keypoints(&self, frame: &Frame) -> Result<KeypointSet> {
        let d = no_grad(|| self.networks.detect(&self.weights.generator, &frame.to_tensor()))?;
        Ok(d.keypoints.to_sets().remove(0))
    }

    pub fn estimate_motion_params(&self, frame: &Frame) -> Result<MotionParams> {
        let m = no_grad(|| self.networks.estimate_motion(&self.weights.generator, &frame.to_tensor()))?;
        Ok(m.to_params().remove(0))
    }

    /// Warped, occlusion-masked generation of one frame.
    pub fn generate(&self, warped: &AppearanceFeatures<f32>, occlusion: &adasr_tensor::Tensor<f32>) -> Result<Frame> {
        let out = no_grad(|| self.networks.generate(&self.weights.generator, warped, occlusion))?;
        Frame::from_tensor(&out, 0)
    }

    pub fn discriminate(&self, frame: &Frame) -> Result<DiscriminatorOutput<f32>> {
        no_grad(|| self.networks.discriminate(&self.weights.discriminator, &frame.to_tensor()))
    }

    /// Full pipeline on one source/driving pair.
    pub fn animate_pair(&self, source: &Frame, driving: &Frame) -> Result<Frame> {
        let out = no_grad(|| self.networks.forward(&self.weights.generator, &source.to_tensor(), &driving.to_tensor()))?;
        Frame::from_tensor(&out.output, 0)
    }
}
