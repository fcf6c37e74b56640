use adasr_tensor::{Element, ParamStore, Tensor};
use rand::Rng;

use super::layers::{conv_norm_act, Conv, Init};
use crate::{Error, Result};

/// Hourglass predicting per-field mask logits and an occlusion logit from
/// heatmap differences, sparse displacements and the source deformed by
/// every sparse field.
#[derive(Clone, Debug)]
pub struct DenseMotionNet {
    keypoints: usize,
    inp: Conv,
    down1: Conv,
    down2: Conv,
    up2: Conv,
    up1: Conv,
    mask: Conv,
    occlusion: Conv,
}

const WIDTH: usize = 64;

/// Output of the dense-motion predictor at feature resolution.
#[derive(Clone, Debug)]
pub struct DenseMotionOutput<T: Element = f32> {
    /// `[B, K+1, H', W']`
    pub mask_logits: Tensor<T>,
    /// `[B, 1, H', W']`
    pub occlusion_logits: Tensor<T>,
}

impl DenseMotionNet {
    pub fn new(prefix: &str, keypoints: usize) -> Self {
        let fields = keypoints + 1;
        Self {
            keypoints,
            inp: Conv::new(format!("{prefix}.inp"), fields * 6, WIDTH, 3),
            down1: Conv::new(format!("{prefix}.down1"), WIDTH, WIDTH, 3).stride(2),
            down2: Conv::new(format!("{prefix}.down2"), WIDTH, WIDTH, 3).stride(2),
            up2: Conv::new(format!("{prefix}.up2"), 2 * WIDTH, WIDTH, 3),
            up1: Conv::new(format!("{prefix}.up1"), 2 * WIDTH, WIDTH, 3),
            mask: Conv::new(format!("{prefix}.mask"), WIDTH, fields, 3).init(Init::Orthogonal(0.1)),
            occlusion: Conv::new(format!("{prefix}.occlusion"), WIDTH, 1, 3).init(Init::Orthogonal(0.1)),
        }
    }

    pub fn register<T: Element>(&self, store: &mut ParamStore<T>, rng: &mut impl Rng) {
        for c in [&self.inp, &self.down1, &self.down2, &self.up2, &self.up1, &self.mask, &self.occlusion] {
            c.register(store, rng);
        }
    }

    /// `heatmaps` `[B, K, H', W']` (driving minus source), `sparse_flows`
    /// `[B, K+1, H', W', 2]`, `source` `[B, 3, H', W']`.
    pub fn forward<T: Element>(
        &self,
        store: &ParamStore<T>,
        heatmaps: &Tensor<T>,
        sparse_flows: &Tensor<T>,
        source: &Tensor<T>,
    ) -> Result<DenseMotionOutput<T>> {
        let hs = heatmaps.shape();
        let (b, k, h, w) = (hs[0], self.keypoints, hs[2], hs[3]);
        if hs != [b, k, h, w] || sparse_flows.shape() != [b, k + 1, h, w, 2] || source.shape() != [b, 3, h, w] {
            return Err(Error::Shape(format!(
                "dense motion inputs {:?}, {:?}, {:?} disagree for K = {k}",
                hs,
                sparse_flows.shape(),
                source.shape()
            )));
        }
        if h % 4 != 0 || w % 4 != 0 {
            return Err(Error::Shape(format!("feature resolution {h}x{w} must be divisible by 4")));
        }
        let heat = Tensor::cat(&[Tensor::zeros(&[b, 1, h, w]), heatmaps.clone()], 1);
        let displacement = sparse_flows
            .sub(&Tensor::identity_grid(1, h, w).reshape(&[1, 1, h, w, 2]))
            .permute(&[0, 1, 4, 2, 3])
            .reshape(&[b, (k + 1) * 2, h, w]);
        let deformed = source
            .reshape(&[b, 1, 3, h, w])
            .broadcast_to(&[b, k + 1, 3, h, w])
            .reshape(&[b * (k + 1), 3, h, w])
            .grid_sample(&sparse_flows.reshape(&[b * (k + 1), h, w, 2]))
            .reshape(&[b, (k + 1) * 3, h, w]);
        let x0 = conv_norm_act(&self.inp, store, &Tensor::cat(&[heat, displacement, deformed], 1));
        let x1 = conv_norm_act(&self.down1, store, &x0);
        let x2 = conv_norm_act(&self.down2, store, &x1);
        let u2 = conv_norm_act(&self.up2, store, &Tensor::cat(&[x2.resize_bilinear(x1.dim(2), x1.dim(3)), x1], 1));
        let u1 = conv_norm_act(&self.up1, store, &Tensor::cat(&[u2.resize_bilinear(h, w), x0], 1));
        Ok(DenseMotionOutput {
            mask_logits: self.mask.forward(store, &u1),
            occlusion_logits: self.occlusion.forward(store, &u1),
        })
    }
}
