use adasr_tensor::{Element, ParamStore, Tensor};
use rand::Rng;

use super::layers::{conv_norm_act, Conv, Init};
use crate::motion_field::KeypointTensors;

/// Expectation of the lattice coordinates under spatial-softmax
/// probabilities. `scores` is `[B, K, H, W]`; returns positions `[B, K, 2]`
/// and probabilities `[B, K, H, W]`.
pub fn soft_argmax<T: Element>(scores: &Tensor<T>, temperature: f64) -> (Tensor<T>, Tensor<T>) {
    let s = scores.shape();
    let (b, k, h, w) = (s[0], s[1], s[2], s[3]);
    let prob = scores.mul_scalar(1.0 / temperature).reshape(&[b, k, h * w]).softmax(2);
    let lattice = Tensor::identity_grid(1, h, w).reshape(&[h * w, 2]);
    (prob.matmul(&lattice), prob.reshape(&[b, k, h, w]))
}

/// Detector output: keypoints in image space plus the spatial probabilities.
#[derive(Clone, Debug)]
pub struct Detection<T: Element = f32> {
    pub keypoints: KeypointTensors<T>,
    pub probabilities: Tensor<T>,
}

/// Small encoder-decoder predicting K score maps at quarter resolution, with
/// depth and Jacobian read out under each keypoint's probability map.
#[derive(Clone, Debug)]
pub struct KeypointDetector {
    keypoints: usize,
    temperature: f64,
    use_jacobians: bool,
    enc1: Conv,
    enc2: Conv,
    enc3: Conv,
    dec: Conv,
    heat: Conv,
    depth: Conv,
    jacobian: Conv,
}

impl KeypointDetector {
    pub fn new(prefix: &str, keypoints: usize, temperature: f64, use_jacobians: bool) -> Self {
        Self {
            keypoints,
            temperature,
            use_jacobians,
            enc1: Conv::new(format!("{prefix}.enc1"), 3, 16, 3),
            enc2: Conv::new(format!("{prefix}.enc2"), 16, 32, 3).stride(2),
            enc3: Conv::new(format!("{prefix}.enc3"), 32, 64, 3).stride(2),
            dec: Conv::new(format!("{prefix}.dec"), 96, 32, 3),
            heat: Conv::new(format!("{prefix}.heat"), 32, keypoints, 3).init(Init::Orthogonal(1.0)),
            depth: Conv::new(format!("{prefix}.depth"), 32, keypoints, 3).init(Init::Orthogonal(0.1)),
            jacobian: Conv::new(format!("{prefix}.jacobian"), 32, 4 * keypoints, 3).init(Init::Zeros),
        }
    }

    pub fn register<T: Element>(&self, store: &mut ParamStore<T>, rng: &mut impl Rng) {
        for c in [&self.enc1, &self.enc2, &self.enc3, &self.dec, &self.heat, &self.depth] {
            c.register(store, rng);
        }
        if self.use_jacobians {
            self.jacobian.register(store, rng);
            // zero weights with an identity bias: Jacobians start at I
            let bias: Vec<T> = (0..4 * self.keypoints)
                .map(|i| if i % 4 == 0 || i % 4 == 3 { T::one() } else { T::zero() })
                .collect();
            store.set_values(&format!("{}.bias", self.jacobian.name), bias);
        }
    }

    /// Detects keypoints on `[B, 3, R, R]` images; maps come out at `R / 4`.
    pub fn forward<T: Element>(&self, store: &ParamStore<T>, image: &Tensor<T>) -> Detection<T> {
        let x = image.avg_pool2d(2).mul_scalar(2.0).add_scalar(-1.0);
        let e1 = conv_norm_act(&self.enc1, store, &x);
        let e2 = conv_norm_act(&self.enc2, store, &e1);
        let e3 = conv_norm_act(&self.enc3, store, &e2);
        let up = e3.resize_bilinear(e2.dim(2), e2.dim(3));
        let d = conv_norm_act(&self.dec, store, &Tensor::cat(&[up, e2], 1));
        let (b, k, h, w) = (d.dim(0), self.keypoints, d.dim(2), d.dim(3));
        let (positions, prob) = soft_argmax(&self.heat.forward(store, &d), self.temperature);
        let weights = prob.reshape(&[b, k, 1, h * w]);
        let depth = self
            .depth
            .forward(store, &d)
            .reshape(&[b, k, 1, h * w])
            .mul(&weights)
            .sum_axes(&[3])
            .reshape(&[b, k, 1]);
        let jacobians = self.use_jacobians.then(|| {
            self.jacobian
                .forward(store, &d)
                .reshape(&[b, k, 4, h * w])
                .mul(&weights)
                .sum_axes(&[3])
                .reshape(&[b, k, 2, 2])
        });
        Detection {
            keypoints: KeypointTensors { points: Tensor::cat(&[positions, depth], 2), jacobians },
            probabilities: prob,
        }
    }
}
