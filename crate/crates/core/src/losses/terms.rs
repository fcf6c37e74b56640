//! Differentiable, batched loss terms. Every function returns a scalar
//! tensor so the terms can be weighted and backpropagated together.

use adasr_tensor::{Element, Tensor};

use super::tps::ThinPlateSpline;
use crate::motion_field::batched::canonical_to_posed;
use crate::motion_field::{KeypointTensors, MotionTensors};
use crate::networks::{DiscriminatorOutput, FeatureExtractor};
use crate::{Error, Result};

/// `sqrt` whose derivative at 0 is taken as 0 instead of infinity.
fn safe_sqrt<T: Element>(x: &Tensor<T>) -> Tensor<T> {
    x.map(
        |v| v.sqrt(),
        |_, y| if y > T::zero() { T::of(0.5) / y } else { T::zero() },
    )
}

fn check_same(a: &[usize], b: &[usize], what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{what}: shapes {a:?} and {b:?} differ")));
    }
    Ok(())
}

/// Mean over keypoints of the Euclidean distance between `(x, y, depth)`.
pub fn keypoint_loss<T: Element>(a: &KeypointTensors<T>, b: &KeypointTensors<T>) -> Result<Tensor<T>> {
    check_same(a.points.shape(), b.points.shape(), "keypoint loss")?;
    Ok(safe_sqrt(&a.points.sub(&b.points).square().sum_axes(&[2])).mean())
}

/// Mean absolute difference of Euler angles `[B, 3]`.
pub fn pose_loss<T: Element>(euler_a: &Tensor<T>, euler_b: &Tensor<T>) -> Result<Tensor<T>> {
    check_same(euler_a.shape(), euler_b.shape(), "pose loss")?;
    Ok(euler_a.sub(euler_b).abs().mean())
}

/// Mean absolute difference over every expression-delta component.
pub fn expression_loss<T: Element>(deltas_a: &Tensor<T>, deltas_b: &Tensor<T>) -> Result<Tensor<T>> {
    check_same(deltas_a.shape(), deltas_b.shape(), "expression loss")?;
    Ok(deltas_a.sub(deltas_b).abs().mean())
}

/// L1 distance between canonical keypoints carried through `mp` and the
/// keypoints detected in the posed image (positions and depth, plus
/// Jacobians when both sides carry them), plus `prior * mean |delta|`.
pub fn deformation_loss<T: Element>(
    canonical: &KeypointTensors<T>,
    mp: &MotionTensors<T>,
    detected: &KeypointTensors<T>,
    prior: f64,
) -> Result<Tensor<T>> {
    check_same(canonical.points.shape(), detected.points.shape(), "deformation loss")?;
    let posed = canonical_to_posed(canonical, mp)?;
    let mut loss = posed.points.sub(&detected.points).abs().mean();
    if let (Some(jp), Some(jd)) = (&posed.jacobians, &detected.jacobians) {
        loss = loss.add(&jp.sub(jd).abs().mean());
    }
    Ok(loss.add(&mp.deltas.abs().mean().mul_scalar(prior)))
}

/// Keypoint consistency under a known warp. `images` are resampled through
/// `tps`; keypoints found on the warped images, mapped back through `tps`,
/// should land on the keypoints found on the originals:
/// `mean |T(detect(I o T)) - detect(I)|`.
pub fn equivariance_loss<T: Element>(
    detect: impl Fn(&Tensor<T>) -> Result<Tensor<T>>,
    images: &Tensor<T>,
    tps: &ThinPlateSpline,
) -> Result<Tensor<T>> {
    let s = images.shape();
    let (b, h, w) = (s[0], s[2], s[3]);
    let original = detect(images)?;
    let warped_images = if tps.is_identity() { images.clone() } else { images.grid_sample(&tps.grid(b, h, w)) };
    let on_warped = detect(&warped_images)?;
    check_same(original.shape(), on_warped.shape(), "equivariance loss")?;
    Ok(tps.apply(&on_warped).sub(&original).abs().mean())
}

/// Sum over extractor layers of the mean absolute activation difference,
/// at full and half resolution.
pub fn perceptual_loss<T: Element>(
    extractor: &FeatureExtractor<T>,
    pred: &Tensor<T>,
    target: &Tensor<T>,
) -> Result<Tensor<T>> {
    check_same(pred.shape(), target.shape(), "perceptual loss")?;
    let mut total = Tensor::scalar(T::zero());
    for (p, t) in [(pred.clone(), target.clone()), (pred.avg_pool2d(2), target.avg_pool2d(2))] {
        for (fp, ft) in extractor.features(&p).iter().zip(extractor.features(&t)) {
            total = total.add(&fp.sub(&ft).abs().mean());
        }
    }
    Ok(total)
}

/// Hinge loss of the discriminator, averaged over scales.
pub fn discriminator_hinge_loss<T: Element>(real: &DiscriminatorOutput<T>, fake: &DiscriminatorOutput<T>) -> Tensor<T> {
    let n = real.logits.len() as f64;
    let mut total = Tensor::scalar(T::zero());
    for (r, f) in real.logits.iter().zip(&fake.logits) {
        let term = r.neg().add_scalar(1.0).relu().mean().add(&f.add_scalar(1.0).relu().mean());
        total = total.add(&term);
    }
    total.mul_scalar(1.0 / n)
}

/// `-mean(fake logits)`, averaged over scales.
pub fn generator_hinge_loss<T: Element>(fake: &DiscriminatorOutput<T>) -> Tensor<T> {
    let n = fake.logits.len() as f64;
    let mut total = Tensor::scalar(T::zero());
    for f in &fake.logits {
        total = total.sub(&f.mean());
    }
    total.mul_scalar(1.0 / n)
}

/// Mean absolute difference of discriminator activations, averaged over
/// scales and layers. Real activations act as constants.
pub fn feature_matching_loss<T: Element>(real: &DiscriminatorOutput<T>, fake: &DiscriminatorOutput<T>) -> Tensor<T> {
    let mut total = Tensor::scalar(T::zero());
    let mut count = 0usize;
    for (rs, fs) in real.features.iter().zip(&fake.features) {
        for (r, f) in rs.iter().zip(fs) {
            total = total.add(&f.sub(&r.detach()).abs().mean());
            count += 1;
        }
    }
    total.mul_scalar(1.0 / count.max(1) as f64)
}
