//! Loss families of the generator objective, the discriminator objective
//! and their weighted combination.
//!
//! [`terms`] holds the differentiable batched forms used in training; the
//! functions here take plain keypoint, motion and frame values.

pub mod report;
pub mod terms;
mod tps;
mod weights;

use adasr_tensor::{no_grad, ParamStore, Tensor};

pub use report::{total_loss, LossFamily, LossReport, LossTerms};
pub use tps::{ThinPlateSpline, CONTROL_GRID, CONTROL_SIGMA};
pub use weights::LossWeights;

use crate::media_io::Frame;
use crate::motion_field::{KeypointSet, KeypointTensors, MotionParams, MotionTensors};
use crate::networks::{FeatureExtractor, MultiScaleDiscriminator};
use crate::{Error, Result};

fn sets(a: &KeypointSet, b: &KeypointSet) -> Result<(KeypointTensors<f64>, KeypointTensors<f64>)> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("{} keypoints vs {}", a.len(), b.len())));
    }
    Ok((
        KeypointTensors::from_sets(std::slice::from_ref(a))?,
        KeypointTensors::from_sets(std::slice::from_ref(b))?,
    ))
}

pub fn keypoint_loss(a: &KeypointSet, b: &KeypointSet) -> Result<f64> {
    let (a, b) = sets(a, b)?;
    Ok(no_grad(|| terms::keypoint_loss(&a, &b))?.item())
}

pub fn pose_loss(a: &MotionParams, b: &MotionParams) -> Result<f64> {
    let (ea, eb) = (a.euler(), b.euler());
    Ok(ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).sum::<f64>() / 3.0)
}

pub fn expression_loss(a: &MotionParams, b: &MotionParams) -> Result<f64> {
    let (ta, tb) = (MotionTensors::<f64>::from_params(&[a.clone()])?, MotionTensors::<f64>::from_params(&[b.clone()])?);
    Ok(no_grad(|| terms::expression_loss(&ta.deltas, &tb.deltas))?.item())
}

pub fn deformation_loss(canonical: &KeypointSet, mp: &MotionParams, detected: &KeypointSet, prior: f64) -> Result<f64> {
    let (c, d) = sets(canonical, detected)?;
    let m = MotionTensors::<f64>::from_params(&[mp.clone()])?;
    Ok(no_grad(|| terms::deformation_loss(&c, &m, &d, prior))?.item())
}

/// Equivariance of a detector mapping `[B, 3, H, W]` images to `[B, K, 2]`
/// positions, evaluated on one frame under a spline warp.
pub fn equivariance_loss(
    detector: impl Fn(&Tensor<f64>) -> Result<Tensor<f64>>,
    frame: &Frame,
    tps: &ThinPlateSpline,
) -> Result<f64> {
    let img = frame.to_tensor().cast::<f64>();
    Ok(no_grad(|| terms::equivariance_loss(detector, &img, tps))?.item())
}

pub fn perceptual_loss(extractor: &FeatureExtractor<f32>, pred: &Frame, target: &Frame) -> Result<f64> {
    if !pred.same_size(target) {
        return Err(Error::Shape("perceptual loss needs frames of equal size".into()));
    }
    let v = no_grad(|| terms::perceptual_loss(extractor, &pred.to_tensor(), &target.to_tensor()))?;
    Ok(v.item() as f64)
}

/// Generator hinge, discriminator hinge and feature-matching values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdversarialLosses {
    pub generator: f64,
    pub discriminator: f64,
    pub feature_matching: f64,
}

pub fn adversarial_losses(
    disc: &MultiScaleDiscriminator,
    store: &ParamStore<f32>,
    real: &Frame,
    fake: &Frame,
) -> Result<AdversarialLosses> {
    if !real.same_size(fake) {
        return Err(Error::Shape("adversarial losses need frames of equal size".into()));
    }
    no_grad(|| {
        let r = disc.forward(store, &real.to_tensor());
        let f = disc.forward(store, &fake.to_tensor());
        Ok(AdversarialLosses {
            generator: terms::generator_hinge_loss(&f).item() as f64,
            discriminator: terms::discriminator_hinge_loss(&r, &f).item() as f64,
            feature_matching: terms::feature_matching_loss(&r, &f).item() as f64,
        })
    })
}
