use adasr_tensor::optim::Adam;

use crate::media_io::Config;
use crate::motion_field::MotionParams;
use crate::networks::{Checkpoint, FeatureExtractor, Model, NetworkWeights, Networks};
use crate::media_io::Frame;
use crate::Result;

/// External head-pose and expression estimator. When configured, the pose
/// and expression losses compare the pose head on generated frames with
/// this oracle on the targets.
pub trait PoseOracle: Send + Sync {
    fn estimate(&self, frame: &Frame) -> Result<MotionParams>;
}

/// Weights, optimizer moments and step counter of a training run. Random
/// streams are derived from `(config.seed, step)`, so the step counter is
/// the whole random state.
pub struct TrainState {
    pub config: Config,
    pub networks: Networks,
    pub weights: NetworkWeights,
    pub generator_optimizer: Adam<f32>,
    pub discriminator_optimizer: Adam<f32>,
    pub step: u64,
    pub(crate) extractor: FeatureExtractor<f32>,
    pub(crate) pose_oracle: Option<Box<dyn PoseOracle>>,
}

fn optimizer(config: &Config) -> Adam<f32> {
    let o = &config.optimizer;
    Adam::new(o.learning_rate, o.beta1, o.beta2)
}

impl TrainState {
    pub fn new(config: Config) -> Result<Self> {
        config.validate()?;
        let networks = Networks::from_config(&config)?;
        let weights = NetworkWeights::init(&networks, config.seed);
        Ok(Self {
            generator_optimizer: optimizer(&config),
            discriminator_optimizer: optimizer(&config),
            networks,
            weights,
            config,
            step: 0,
            extractor: FeatureExtractor::new(),
            pose_oracle: None,
        })
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Self> {
        let mut state = Self::new(ckpt.config)?;
        state.weights = ckpt.weights;
        state.generator_optimizer.set_state(ckpt.generator_optimizer);
        state.discriminator_optimizer.set_state(ckpt.discriminator_optimizer);
        state.step = ckpt.step;
        Ok(state)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            step: self.step,
            weights: self.weights.clone(),
            generator_optimizer: self.generator_optimizer.state().clone(),
            discriminator_optimizer: self.discriminator_optimizer.state().clone(),
        }
    }

    pub fn set_pose_oracle(&mut self, oracle: Box<dyn PoseOracle>) {
        self.pose_oracle = Some(oracle);
    }

    pub fn model(&self) -> Model {
        Model::new(self.networks.clone(), self.weights.clone())
    }
}
