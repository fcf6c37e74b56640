use adasr_tensor::{Element, ParamStore, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dense_motion::{DenseMotionNet, DenseMotionOutput};
use super::discriminator::{DiscriminatorOutput, MultiScaleDiscriminator};
use super::encoder::{AppearanceEncoder, AppearanceFeatures};
use super::generator::Generator;
use super::keypoints::{Detection, KeypointDetector};
use super::pose::PoseHead;
use super::ModelConfig;
use crate::media_io::Config;
use crate::motion_field::batched::{
    canonical_to_posed, combine_dense_motion, difference_heatmaps, posed_to_canonical, resize_flow, sparse_motion,
    warp,
};
use crate::motion_field::{KeypointTensors, MotionTensors};
use crate::seeds::derive_seed;
use crate::{Error, Result};

pub const ENCODER: &str = "encoder";
pub const KEYPOINT_DETECTOR: &str = "keypoint_detector";
pub const POSE_HEAD: &str = "pose_head";
pub const DENSE_MOTION: &str = "dense_motion";
pub const GENERATOR: &str = "generator";
pub const DISCRIMINATOR: &str = "discriminator";

/// Number of discriminator scales (full and half resolution).
pub const DISCRIMINATOR_SCALES: usize = 2;

/// Everything [`Networks::forward`] computes on the way to the output.
#[derive(Clone, Debug)]
pub struct ForwardOutput<T: Element = f32> {
    /// `[B, 3, R, R]` in `[0, 1]`.
    pub output: Tensor<T>,
    pub source_features: AppearanceFeatures<T>,
    pub warped_features: AppearanceFeatures<T>,
    /// Keypoints detected on the source image.
    pub source_keypoints: KeypointTensors<T>,
    pub canonical_keypoints: KeypointTensors<T>,
    /// Canonical keypoints carried into the driving pose.
    pub driving_keypoints: KeypointTensors<T>,
    pub source_motion: MotionTensors<T>,
    pub driving_motion: MotionTensors<T>,
    /// `[B, K+1, H', W', 2]`
    pub sparse_flows: Tensor<T>,
    /// `[B, K+1, H', W']`
    pub mask_weights: Tensor<T>,
    /// `[B, H', W', 2]`
    pub flow: Tensor<T>,
    /// `[B, 1, H', W']` in `(0, 1)`.
    pub occlusion: Tensor<T>,
}

/// Layer descriptions of every network; weights live in parameter stores.
#[derive(Clone, Debug)]
pub struct Networks {
    resolution: usize,
    keypoints: usize,
    config: ModelConfig,
    pub encoder: AppearanceEncoder,
    pub detector: KeypointDetector,
    pub pose: PoseHead,
    pub dense_motion: DenseMotionNet,
    pub generator: Generator,
    pub discriminator: MultiScaleDiscriminator,
}

impl Networks {
    pub fn new(resolution: usize, keypoints: usize, config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        if resolution % 16 != 0 || resolution < 32 {
            return Err(Error::config("resolution", "must be a multiple of 16 and at least 32"));
        }
        if keypoints == 0 {
            return Err(Error::config("keypoint_count", "must be at least 1"));
        }
        let encoder = AppearanceEncoder::new(ENCODER, config.base_channels);
        let generator = Generator::new(GENERATOR, encoder.channels());
        Ok(Self {
            resolution,
            keypoints,
            config: config.clone(),
            detector: KeypointDetector::new(
                KEYPOINT_DETECTOR,
                keypoints,
                config.keypoint_temperature,
                config.use_jacobians,
            ),
            pose: PoseHead::new(POSE_HEAD, keypoints),
            dense_motion: DenseMotionNet::new(DENSE_MOTION, keypoints),
            encoder,
            generator,
            discriminator: MultiScaleDiscriminator::new(DISCRIMINATOR, DISCRIMINATOR_SCALES),
        })
    }

    pub fn from_config(config: &Config) -> Result<Self> {
        Self::new(config.resolution, config.keypoint_count, &config.model)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn feature_resolution(&self) -> usize {
        self.resolution / 4
    }

    pub fn keypoint_count(&self) -> usize {
        self.keypoints
    }

    pub fn model_config(&self) -> &ModelConfig {
        &self.config
    }

    /// Fresh weights for everything except the discriminator.
    pub fn init_generator_params<T: Element>(&self, seed: u64) -> ParamStore<T> {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1]));
        self.encoder.register(&mut store, &mut rng);
        self.detector.register(&mut store, &mut rng);
        self.pose.register(&mut store, &mut rng);
        self.dense_motion.register(&mut store, &mut rng);
        self.generator.register(&mut store, &mut rng);
        store
    }

    pub fn init_discriminator_params<T: Element>(&self, seed: u64) -> ParamStore<T> {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[2]));
        self.discriminator.register(&mut store, &mut rng);
        store
    }

    fn check_images<T: Element>(&self, image: &Tensor<T>) -> Result<()> {
        let r = self.resolution;
        let s = image.shape();
        if s.len() != 4 || s[1] != 3 || s[2] != r || s[3] != r {
            return Err(Error::Shape(format!("expected images [B, 3, {r}, {r}], got {s:?}")));
        }
        Ok(())
    }

    pub fn encode<T: Element>(&self, store: &ParamStore<T>, image: &Tensor<T>) -> Result<AppearanceFeatures<T>> {
        self.check_images(image)?;
        Ok(self.encoder.forward(store, image))
    }

    pub fn detect<T: Element>(&self, store: &ParamStore<T>, image: &Tensor<T>) -> Result<Detection<T>> {
        self.check_images(image)?;
        Ok(self.detector.forward(store, image))
    }

    pub fn estimate_motion<T: Element>(&self, store: &ParamStore<T>, image: &Tensor<T>) -> Result<MotionTensors<T>> {
        self.check_images(image)?;
        Ok(self.pose.forward(store, image))
    }

    pub fn predict_dense_motion<T: Element>(
        &self,
        store: &ParamStore<T>,
        heatmaps: &Tensor<T>,
        sparse_flows: &Tensor<T>,
        source: &Tensor<T>,
    ) -> Result<DenseMotionOutput<T>> {
        self.dense_motion.forward(store, heatmaps, sparse_flows, source)
    }

    pub fn generate<T: Element>(
        &self,
        store: &ParamStore<T>,
        warped: &AppearanceFeatures<T>,
        occlusion: &Tensor<T>,
    ) -> Result<Tensor<T>> {
        self.generator.forward(store, warped, occlusion)
    }

    pub fn discriminate<T: Element>(&self, store: &ParamStore<T>, image: &Tensor<T>) -> Result<DiscriminatorOutput<T>> {
        self.check_images(image)?;
        Ok(self.discriminator.forward(store, image))
    }

    /// Animates `source` with the motion estimated from `driving`.
    pub fn forward<T: Element>(
        &self,
        store: &ParamStore<T>,
        source: &Tensor<T>,
        driving: &Tensor<T>,
    ) -> Result<ForwardOutput<T>> {
        self.check_images(driving)?;
        if driving.dim(0) != source.dim(0) {
            return Err(Error::Shape("source and driving batches differ".into()));
        }
        let driving_motion = self.pose.forward(store, driving);
        self.forward_with_motion(store, source, driving_motion)
    }

    /// Animates `source` with explicitly given driving motion parameters.
    pub fn forward_with_motion<T: Element>(
        &self,
        store: &ParamStore<T>,
        source: &Tensor<T>,
        driving_motion: MotionTensors<T>,
    ) -> Result<ForwardOutput<T>> {
        self.check_images(source)?;
        let f = self.feature_resolution();
        let source_features = self.encoder.forward(store, source);
        let source_keypoints = self.detector.forward(store, source).keypoints;
        let source_motion = self.pose.forward(store, source);
        let canonical_keypoints = posed_to_canonical(&source_keypoints, &source_motion)?;
        let driving_keypoints = canonical_to_posed(&canonical_keypoints, &driving_motion)?;
        // the source side is re-posed through the canonical frame so both
        // sides share one parameterization
        let source_posed = canonical_to_posed(&canonical_keypoints, &source_motion)?;
        let sparse_flows = sparse_motion(&source_posed, &driving_keypoints, f, f)?;
        let heatmaps = difference_heatmaps(&source_posed, &driving_keypoints, f, f, self.config.heatmap_sigma)?;
        let small_source = source.avg_pool2d(4);
        let dense = self.dense_motion.forward(store, &heatmaps, &sparse_flows, &small_source)?;
        let (flow, mask_weights) = combine_dense_motion(&dense.mask_logits, &sparse_flows)?;
        let occlusion = dense.occlusion_logits.sigmoid();
        let last = source_features.maps.len() - 1;
        let warped_maps = source_features
            .maps
            .iter()
            .enumerate()
            .map(|(i, m)| {
                if i == last || self.config.warp_all_scales {
                    warp(m, &resize_flow(&flow, m.dim(2), m.dim(3)))
                } else {
                    Ok(m.clone())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let warped_features = AppearanceFeatures { maps: warped_maps };
        let output = self.generator.forward(store, &warped_features, &occlusion)?;
        Ok(ForwardOutput {
            output,
            source_features,
            warped_features,
            source_keypoints,
            canonical_keypoints,
            driving_keypoints,
            source_motion,
            driving_motion,
            sparse_flows,
            mask_weights,
            flow,
            occlusion,
        })
    }
}
