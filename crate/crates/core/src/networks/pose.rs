use std::f64::consts::FRAC_PI_2;

use adasr_tensor::{Element, ParamStore, Tensor};
use rand::Rng;

use super::layers::{lrelu, Conv, Init, Linear};
use crate::motion_field::batched::rotation_from_euler;
use crate::motion_field::MotionTensors;

/// Regresses Euler angles, translation and expression deltas from an image.
#[derive(Clone, Debug)]
pub struct PoseHead {
    keypoints: usize,
    conv1: Conv,
    conv2: Conv,
    conv3: Conv,
    hidden: Linear,
    out: Linear,
}

impl PoseHead {
    pub fn new(prefix: &str, keypoints: usize) -> Self {
        Self {
            keypoints,
            conv1: Conv::new(format!("{prefix}.conv1"), 3, 16, 3).stride(2),
            conv2: Conv::new(format!("{prefix}.conv2"), 16, 32, 3).stride(2),
            conv3: Conv::new(format!("{prefix}.conv3"), 32, 64, 3).stride(2),
            hidden: Linear::new(format!("{prefix}.hidden"), 64, 64),
            out: Linear::new(format!("{prefix}.out"), 64, 6 + 3 * keypoints).init(Init::Orthogonal(0.01)),
        }
    }

    pub fn register<T: Element>(&self, store: &mut ParamStore<T>, rng: &mut impl Rng) {
        for c in [&self.conv1, &self.conv2, &self.conv3] {
            c.register(store, rng);
        }
        self.hidden.register(store, rng);
        self.out.register(store, rng);
    }

    /// Angles are squashed into `(-pi/2, pi/2)`.
    pub fn forward<T: Element>(&self, store: &ParamStore<T>, image: &Tensor<T>) -> MotionTensors<T> {
        let b = image.dim(0);
        let x = image.avg_pool2d(2).mul_scalar(2.0).add_scalar(-1.0);
        let x = lrelu(&self.conv1.forward(store, &x));
        let x = lrelu(&self.conv2.forward(store, &x));
        let x = lrelu(&self.conv3.forward(store, &x));
        let pooled = x.mean_axes(&[2, 3]).reshape(&[b, 64]);
        let raw = self.out.forward(store, &lrelu(&self.hidden.forward(store, &pooled)));
        let euler = raw.narrow(1, 0, 3).tanh().mul_scalar(FRAC_PI_2);
        MotionTensors {
            rotation: rotation_from_euler(&euler),
            translation: raw.narrow(1, 3, 3),
            deltas: raw.narrow(1, 6, 3 * self.keypoints).reshape(&[b, self.keypoints, 3]),
            euler: Some(euler),
        }
    }
}
