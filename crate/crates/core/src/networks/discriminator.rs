use adasr_tensor::{Element, ParamStore, Tensor};
use rand::Rng;

use super::layers::{lrelu, Conv, Init};

/// Patch logits `[B, 1, h_s, w_s]` and intermediate activations per scale.
#[derive(Clone, Debug)]
pub struct DiscriminatorOutput<T: Element = f32> {
    pub logits: Vec<Tensor<T>>,
    pub features: Vec<Vec<Tensor<T>>>,
}

/// Patch discriminators applied to the image and to successive 2x
/// downsamplings of it.
#[derive(Clone, Debug)]
pub struct MultiScaleDiscriminator {
    scales: Vec<[Conv; 3]>,
}

/// Total stride of each scale's patch classifier.
pub const PATCH_STRIDE: usize = 4;

impl MultiScaleDiscriminator {
    pub fn new(prefix: &str, scales: usize) -> Self {
        Self {
            scales: (0..scales)
                .map(|s| {
                    [
                        Conv::new(format!("{prefix}.scale{s}.conv1"), 3, 32, 4).stride(2).padding(1),
                        Conv::new(format!("{prefix}.scale{s}.conv2"), 32, 64, 4).stride(2).padding(1),
                        Conv::new(format!("{prefix}.scale{s}.logits"), 64, 1, 3).init(Init::Orthogonal(1.0)),
                    ]
                })
                .collect(),
        }
    }

    pub fn scale_count(&self) -> usize {
        self.scales.len()
    }

    pub fn register<T: Element>(&self, store: &mut ParamStore<T>, rng: &mut impl Rng) {
        for convs in &self.scales {
            for c in convs {
                c.register(store, rng);
            }
        }
    }

    pub fn forward<T: Element>(&self, store: &ParamStore<T>, image: &Tensor<T>) -> DiscriminatorOutput<T> {
        let mut x = image.mul_scalar(2.0).add_scalar(-1.0);
        let mut out = DiscriminatorOutput { logits: Vec::new(), features: Vec::new() };
        for (s, [c1, c2, head]) in self.scales.iter().enumerate() {
            if s > 0 {
                x = x.avg_pool2d(2);
            }
            let f1 = lrelu(&c1.forward(store, &x));
            let f2 = lrelu(&c2.forward(store, &f1));
            out.logits.push(head.forward(store, &f2));
            out.features.push(vec![f1, f2]);
        }
        out
    }
}
