use adasr_tensor::ParamStore;

use super::model::{Networks, ENCODER, GENERATOR};

/// Format tag written into every weight archive.
pub const WEIGHTS_VERSION: &str = "adasr-weights-v1";

/// Name fragments that mark batch-statistic buffers.
const BATCH_STATISTIC_MARKERS: [&str; 3] = ["running_mean", "running_var", "num_batches_tracked"];

/// Parameters of all networks: `generator` holds the encoder, detector,
/// pose head, dense-motion net and generator; `discriminator` is trained by
/// its own optimizer.
#[derive(Clone)]
pub struct NetworkWeights {
    pub version: String,
    pub generator: ParamStore<f32>,
    pub discriminator: ParamStore<f32>,
}

impl NetworkWeights {
    pub fn init(nets: &Networks, seed: u64) -> Self {
        Self {
            version: WEIGHTS_VERSION.to_string(),
            generator: nets.init_generator_params(seed),
            discriminator: nets.init_discriminator_params(seed),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.generator.num_elements() + self.discriminator.num_elements()
    }

    /// Names of batch-statistic buffers inside the encoder and generator.
    pub fn batch_statistic_buffers(&self) -> Vec<String> {
        batch_statistic_buffers(&self.generator, &[ENCODER, GENERATOR])
    }
}

/// Scans the parameters under each network prefix for running statistics.
pub fn batch_statistic_buffers(store: &ParamStore<f32>, prefixes: &[&str]) -> Vec<String> {
    store
        .names()
        .filter(|n| prefixes.iter().any(|p| n.starts_with(&format!("{p}."))))
        .filter(|n| BATCH_STATISTIC_MARKERS.iter().any(|m| n.contains(m)))
        .map(str::to_string)
        .collect()
}
