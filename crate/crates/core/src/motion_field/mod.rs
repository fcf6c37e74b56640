//! Keypoint geometry, sparse and dense motion, warping and occlusion.
//!
//! The functions at this level take single samples (plain keypoint and
//! motion types, unbatched arrays); [`batched`] holds the differentiable
//! batch forms the networks use.

pub mod batched;
mod types;

use adasr_tensor::{Element, Tensor};

pub use types::{
    euler_from_rotation, mat3_mul, mat3_transpose, mat3_vec, rotation_from_euler, Keypoint, KeypointSet,
    KeypointTensors, Mat2, Mat3, MotionParams, MotionTensors, IDENTITY2, IDENTITY3, JACOBIAN_DET_TOLERANCE,
    ROTATION_TOLERANCE,
};

use crate::{Error, Result};

fn check_count(set: &KeypointSet, mp: &MotionParams) -> Result<()> {
    if set.len() != mp.deltas.len() {
        return Err(Error::Shape(format!("{} keypoints but {} expression deltas", set.len(), mp.deltas.len())));
    }
    Ok(())
}

/// Maps canonical keypoints into the posed frame: `R x + t + delta`, with
/// Jacobians left-multiplied by the rotation's upper-left 2x2 block.
pub fn canonical_to_posed(canonical: &KeypointSet, mp: &MotionParams) -> Result<KeypointSet> {
    canonical.validate()?;
    mp.validate()?;
    check_count(canonical, mp)?;
    let kp = KeypointTensors::<f64>::from_sets(std::slice::from_ref(canonical))?;
    let m = MotionTensors::<f64>::from_params(std::slice::from_ref(mp))?;
    Ok(batched::canonical_to_posed(&kp, &m)?.to_sets().remove(0))
}

/// Inverse of [`canonical_to_posed`].
pub fn posed_to_canonical(posed: &KeypointSet, mp: &MotionParams) -> Result<KeypointSet> {
    posed.validate()?;
    mp.validate()?;
    check_count(posed, mp)?;
    let kp = KeypointTensors::<f64>::from_sets(std::slice::from_ref(posed))?;
    let m = MotionTensors::<f64>::from_params(std::slice::from_ref(mp))?;
    Ok(batched::posed_to_canonical(&kp, &m)?.to_sets().remove(0))
}

/// `K+1` coordinate fields `[K+1, H, W, 2]`; field 0 is the identity lattice.
pub fn sparse_motion(src: &KeypointSet, drv: &KeypointSet, size: (usize, usize)) -> Result<Tensor<f64>> {
    if src.len() != drv.len() {
        return Err(Error::Shape(format!("{} source vs {} driving keypoints", src.len(), drv.len())));
    }
    let s = KeypointTensors::<f64>::from_sets(std::slice::from_ref(src))?;
    let d = KeypointTensors::<f64>::from_sets(std::slice::from_ref(drv))?;
    let fields = batched::sparse_motion(&s, &d, size.0, size.1)?;
    Ok(fields.reshape(&fields.shape()[1..]))
}

/// Gaussian heatmaps `[K, H, W]`.
pub fn gaussian_heatmap(kp: &KeypointSet, size: (usize, usize), sigma: f64) -> Result<Tensor<f64>> {
    let t = KeypointTensors::<f64>::from_sets(std::slice::from_ref(kp))?;
    let maps = batched::gaussian_heatmap(&t, size.0, size.1, sigma)?;
    Ok(maps.reshape(&maps.shape()[1..]))
}

/// Signed differences `[K, H, W]` of driving and source heatmaps.
pub fn difference_heatmaps(
    src: &KeypointSet,
    drv: &KeypointSet,
    size: (usize, usize),
    sigma: f64,
) -> Result<Tensor<f64>> {
    if src.len() != drv.len() {
        return Err(Error::Shape(format!("{} source vs {} driving keypoints", src.len(), drv.len())));
    }
    Ok(gaussian_heatmap(drv, size, sigma)?.sub(&gaussian_heatmap(src, size, sigma)?))
}

fn unsqueeze<T: Element>(t: &Tensor<T>) -> Tensor<T> {
    let mut shape = vec![1];
    shape.extend_from_slice(t.shape());
    t.reshape(&shape)
}

fn squeeze<T: Element>(t: &Tensor<T>) -> Tensor<T> {
    t.reshape(&t.shape()[1..])
}

/// Dense flow `[H, W, 2]` from logits `[K+1, H, W]` and fields `[K+1, H, W, 2]`.
pub fn combine_dense_motion<T: Element>(mask_logits: &Tensor<T>, sparse_flows: &Tensor<T>) -> Result<Tensor<T>> {
    let (flow, _) = batched::combine_dense_motion(&unsqueeze(mask_logits), &unsqueeze(sparse_flows))?;
    Ok(squeeze(&flow))
}

/// Per-pixel softmax weights `[K+1, H, W]` used by [`combine_dense_motion`].
pub fn dense_motion_weights<T: Element>(mask_logits: &Tensor<T>) -> Tensor<T> {
    mask_logits.softmax(0)
}

/// Backward-warps `[C, H, W]` features with a `[H', W', 2]` flow.
pub fn warp<T: Element>(features: &Tensor<T>, flow: &Tensor<T>) -> Result<Tensor<T>> {
    if features.rank() != 3 || flow.rank() != 3 {
        return Err(Error::Shape(format!(
            "warp expects [C, H, W] features and [H, W, 2] flow, got {:?} and {:?}",
            features.shape(),
            flow.shape()
        )));
    }
    Ok(squeeze(&batched::warp(&unsqueeze(features), &unsqueeze(flow))?))
}

/// Multiplies `[C, H, W]` features by a `[H, W]` or `[1, H, W]` mask.
pub fn apply_occlusion<T: Element>(features: &Tensor<T>, mask: &Tensor<T>) -> Result<Tensor<T>> {
    let mask3 = match mask.rank() {
        2 => mask.reshape(&[1, mask.dim(0), mask.dim(1)]),
        3 => mask.clone(),
        _ => return Err(Error::Shape(format!("occlusion mask {:?} is not [H, W]", mask.shape()))),
    };
    if features.rank() != 3 {
        return Err(Error::Shape(format!("features {:?} are not [C, H, W]", features.shape())));
    }
    Ok(squeeze(&batched::apply_occlusion(&unsqueeze(features), &unsqueeze(&mask3))?))
}
