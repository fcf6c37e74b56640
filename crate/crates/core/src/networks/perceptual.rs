use adasr_tensor::{Element, ParamStore, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{lrelu, Conv};

/// Seed of the fixed random extractor weights.
pub const EXTRACTOR_SEED: u64 = 0x5eed_fea7;

/// Fixed, untrained convolutional pyramid used for perceptual distances and
/// as the default embedding for distribution and identity metrics.
#[derive(Clone)]
pub struct FeatureExtractor<T: Element = f32> {
    layers: [Conv; 3],
    store: ParamStore<T>,
}

impl<T: Element> FeatureExtractor<T> {
    pub fn new() -> Self {
        let layers = [
            Conv::new("extractor.conv1", 3, 16, 3),
            Conv::new("extractor.conv2", 16, 32, 3).stride(2),
            Conv::new("extractor.conv3", 32, 64, 3).stride(2),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(EXTRACTOR_SEED);
        let mut store = ParamStore::new();
        for l in &layers {
            l.register(&mut store, &mut rng);
        }
        let mut frozen = ParamStore::new();
        for (k, v) in store.iter() {
            frozen.insert_constant(k, v.to_vec(), v.shape());
        }
        Self { layers, store: frozen }
    }

    /// Activations of every layer for `[B, 3, H, W]` images in `[0, 1]`.
    pub fn features(&self, image: &Tensor<T>) -> Vec<Tensor<T>> {
        let mut x = image.mul_scalar(2.0).add_scalar(-1.0);
        let mut out = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            x = lrelu(&l.forward(&self.store, &x));
            out.push(x.clone());
        }
        out
    }

    /// Global average of the deepest activations, `[B, 64]`.
    pub fn embed(&self, image: &Tensor<T>) -> Tensor<T> {
        let deepest = self.features(image).pop().expect("extractor has layers");
        let b = deepest.dim(0);
        let c = deepest.dim(1);
        deepest.mean_axes(&[2, 3]).reshape(&[b, c])
    }
}

impl<T: Element> Default for FeatureExtractor<T> {
    fn default() -> Self {
        Self::new()
    }
}
