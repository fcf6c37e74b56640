//! Differentiable, batched forms of the motion operations. Images and
//! feature maps are `[B, C, H, W]`; coordinate fields are `[B, H, W, 2]`
//! holding normalized `(x, y)` sample positions.

use adasr_tensor::{Element, Tensor};

use super::types::{KeypointTensors, MotionTensors, JACOBIAN_DET_TOLERANCE};
use crate::{Error, Result};

/// `[B, 3]` Euler angles `(yaw, pitch, roll)` to `[B, 3, 3]` rotations
/// `Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn rotation_from_euler<T: Element>(euler: &Tensor<T>) -> Tensor<T> {
    let b = euler.dim(0);
    let angle = |i| euler.narrow(1, i, 1);
    let (sa, ca) = (angle(0).sin(), angle(0).cos());
    let (sb, cb) = (angle(1).sin(), angle(1).cos());
    let (sc, cc) = (angle(2).sin(), angle(2).cos());
    let entries = [
        ca.mul(&cb),
        ca.mul(&sb).mul(&sc).sub(&sa.mul(&cc)),
        ca.mul(&sb).mul(&cc).add(&sa.mul(&sc)),
        sa.mul(&cb),
        sa.mul(&sb).mul(&sc).add(&ca.mul(&cc)),
        sa.mul(&sb).mul(&cc).sub(&ca.mul(&sc)),
        sb.neg(),
        cb.mul(&sc),
        cb.mul(&cc),
    ];
    Tensor::cat(&entries, 1).reshape(&[b, 3, 3])
}

/// Inverse of a stack of 2x2 matrices `[N, 2, 2]` by the adjugate.
pub fn inverse2<T: Element>(m: &Tensor<T>) -> Tensor<T> {
    let n = m.dim(0);
    let flat = m.reshape(&[n, 4]);
    let e = |i| flat.narrow(1, i, 1);
    let (a, b, c, d) = (e(0), e(1), e(2), e(3));
    let det = a.mul(&d).sub(&b.mul(&c));
    Tensor::cat(&[d, b.neg(), c.neg(), a], 1).div(&det).reshape(&[n, 2, 2])
}

fn upper_left2<T: Element>(rotation: &Tensor<T>) -> Tensor<T> {
    rotation.narrow(1, 0, 2).narrow(2, 0, 2)
}

/// Left-multiplies every keypoint Jacobian `[B, K, 2, 2]` by a per-sample
/// matrix `[B, 2, 2]`.
fn left_multiply<T: Element>(m: &Tensor<T>, jac: &Tensor<T>) -> Tensor<T> {
    let (b, k) = (jac.dim(0), jac.dim(1));
    let expanded = m.reshape(&[b, 1, 2, 2]).broadcast_to(&[b, k, 2, 2]).reshape(&[b * k, 2, 2]);
    expanded.matmul(&jac.reshape(&[b * k, 2, 2])).reshape(&[b, k, 2, 2])
}

fn check_motion<T: Element>(kp: &KeypointTensors<T>, mp: &MotionTensors<T>) -> Result<()> {
    if kp.batch() != mp.batch() || mp.deltas.dim(1) != kp.count() {
        return Err(Error::Shape(format!(
            "keypoints {:?} do not match motion deltas {:?}",
            kp.points.shape(),
            mp.deltas.shape()
        )));
    }
    Ok(())
}

/// `x = R x_c + t + delta`; Jacobians become `R_2x2 J`.
pub fn canonical_to_posed<T: Element>(
    canonical: &KeypointTensors<T>,
    mp: &MotionTensors<T>,
) -> Result<KeypointTensors<T>> {
    check_motion(canonical, mp)?;
    let b = mp.batch();
    let points = canonical
        .points
        .matmul(&mp.rotation.transpose_last())
        .add(&mp.translation.reshape(&[b, 1, 3]))
        .add(&mp.deltas);
    let jacobians = canonical.jacobians.as_ref().map(|j| left_multiply(&upper_left2(&mp.rotation), j));
    Ok(KeypointTensors { points, jacobians })
}

/// Inverse of [`canonical_to_posed`]: `x_c = R^T (x - t - delta)` and
/// `J_c = R_2x2^-1 J`.
pub fn posed_to_canonical<T: Element>(
    posed: &KeypointTensors<T>,
    mp: &MotionTensors<T>,
) -> Result<KeypointTensors<T>> {
    check_motion(posed, mp)?;
    let b = mp.batch();
    let points = posed
        .points
        .sub(&mp.translation.reshape(&[b, 1, 3]))
        .sub(&mp.deltas)
        .matmul(&mp.rotation);
    let jacobians = match &posed.jacobians {
        Some(j) => {
            let r2 = upper_left2(&mp.rotation);
            check_determinants(&r2, "rotation block", "sample")?;
            Some(left_multiply(&inverse2(&r2), j))
        }
        None => None,
    };
    Ok(KeypointTensors { points, jacobians })
}

/// Errors when any 2x2 matrix in `[.., 2, 2]` is numerically singular.
fn check_determinants<T: Element>(m: &Tensor<T>, what: &str, unit: &str) -> Result<()> {
    let per = m.dim(m.rank() - 3).max(1);
    for (i, v) in m.data().chunks_exact(4).enumerate() {
        let det = (v[0] * v[3] - v[1] * v[2]).as_f64();
        if !det.is_finite() || det.abs() < JACOBIAN_DET_TOLERANCE {
            return Err(Error::Numeric(format!(
                "singular {what} at {unit} {} (determinant {det:e})",
                i % per
            )));
        }
    }
    Ok(())
}

/// Flattened `[1, 1, H*W, 2]` lattice of normalized coordinates.
fn lattice<T: Element>(h: usize, w: usize) -> Tensor<T> {
    Tensor::identity_grid(1, h, w).reshape(&[1, 1, h * w, 2])
}

/// First-order sparse motion `[B, K+1, H, W, 2]`. Field 0 is the identity;
/// field `k` maps `z` to `p_src + J_src J_drv^-1 (z - p_drv)`.
pub fn sparse_motion<T: Element>(
    src: &KeypointTensors<T>,
    drv: &KeypointTensors<T>,
    h: usize,
    w: usize,
) -> Result<Tensor<T>> {
    if src.points.shape() != drv.points.shape() {
        return Err(Error::Shape(format!(
            "source keypoints {:?} and driving keypoints {:?} differ",
            src.points.shape(),
            drv.points.shape()
        )));
    }
    let (b, k) = (src.batch(), src.count());
    let z = lattice::<T>(h, w);
    let p_src = src.positions().reshape(&[b, k, 1, 2]);
    let p_drv = drv.positions().reshape(&[b, k, 1, 2]);
    // z + (p_src - p_drv) + (A - I)(z - p_drv): exact identity when nothing moves
    let offset = p_src.sub(&p_drv);
    let mut fields = z.add(&offset);
    if src.jacobians.is_some() || drv.jacobians.is_some() {
        let eye = || Tensor::from_f64s(&[1.0, 0.0, 0.0, 1.0], &[1, 1, 2, 2]).broadcast_to(&[b, k, 2, 2]);
        let j_src = src.jacobians.clone().unwrap_or_else(eye).reshape(&[b * k, 2, 2]);
        let j_drv = drv.jacobians.clone().unwrap_or_else(eye).reshape(&[b * k, 2, 2]);
        check_determinants(&j_drv.reshape(&[b, k, 2, 2]), "driving Jacobian", "keypoint")?;
        let a = j_src.matmul(&inverse2(&j_drv)).sub(&Tensor::from_f64s(&[1.0, 0.0, 0.0, 1.0], &[1, 2, 2]));
        let local = z
            .sub(&p_drv)
            .reshape(&[b * k, h * w, 2])
            .matmul(&a.transpose_last())
            .reshape(&[b, k, h * w, 2]);
        fields = fields.add(&local);
    }
    let fields = fields.reshape(&[b, k, h, w, 2]);
    let identity = z.reshape(&[1, 1, h, w, 2]).broadcast_to(&[b, 1, h, w, 2]);
    Ok(Tensor::cat(&[identity, fields], 1))
}

/// Gaussian heatmaps `[B, K, H, W]` centered on the keypoint positions.
pub fn gaussian_heatmap<T: Element>(kp: &KeypointTensors<T>, h: usize, w: usize, sigma: f64) -> Result<Tensor<T>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::config("heatmap_sigma", format!("sigma must be positive, got {sigma}")));
    }
    let (b, k) = (kp.batch(), kp.count());
    let d2 = lattice::<T>(h, w).sub(&kp.positions().reshape(&[b, k, 1, 2])).square().sum_axes(&[3]);
    Ok(d2.mul_scalar(-0.5 / (sigma * sigma)).exp().reshape(&[b, k, h, w]))
}

/// Signed heatmap difference `driving - source`, `[B, K, H, W]`.
pub fn difference_heatmaps<T: Element>(
    src: &KeypointTensors<T>,
    drv: &KeypointTensors<T>,
    h: usize,
    w: usize,
    sigma: f64,
) -> Result<Tensor<T>> {
    if src.points.shape() != drv.points.shape() {
        return Err(Error::Shape("source and driving keypoint counts differ".into()));
    }
    Ok(gaussian_heatmap(drv, h, w, sigma)?.sub(&gaussian_heatmap(src, h, w, sigma)?))
}

/// Softmax-weighted sum of sparse fields. Returns the flow `[B, H, W, 2]`
/// and the weights `[B, K+1, H, W]`.
pub fn combine_dense_motion<T: Element>(
    mask_logits: &Tensor<T>,
    sparse_flows: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let (ls, fs) = (mask_logits.shape(), sparse_flows.shape());
    if ls.len() != 4 || fs.len() != 5 || fs[4] != 2 || ls[..] != fs[..4] {
        return Err(Error::Shape(format!("mask logits {ls:?} do not match sparse flows {fs:?}")));
    }
    if mask_logits.data().iter().any(|v| v.is_nan()) {
        return Err(Error::Numeric("NaN in dense-motion mask logits".into()));
    }
    let (b, k1, h, w) = (ls[0], ls[1], ls[2], ls[3]);
    let weights = mask_logits.softmax(1);
    let flow = weights.reshape(&[b, k1, h, w, 1]).mul(sparse_flows).sum_axes(&[1]).reshape(&[b, h, w, 2]);
    Ok((flow, weights))
}

/// Bilinear backward warp with border clamping.
pub fn warp<T: Element>(features: &Tensor<T>, flow: &Tensor<T>) -> Result<Tensor<T>> {
    let (fs, gs) = (features.shape(), flow.shape());
    if fs.len() != 4 || gs.len() != 4 || gs[3] != 2 || fs[0] != gs[0] {
        return Err(Error::Shape(format!("cannot warp features {fs:?} with flow {gs:?}")));
    }
    Ok(features.grid_sample(flow))
}

/// Multiplies features `[B, C, H, W]` by a mask `[B, 1, H, W]` (or `[B, C, H, W]`).
pub fn apply_occlusion<T: Element>(features: &Tensor<T>, mask: &Tensor<T>) -> Result<Tensor<T>> {
    let (fs, ms) = (features.shape(), mask.shape());
    let ok = fs.len() == 4 && ms.len() == 4 && ms[0] == fs[0] && (ms[1] == 1 || ms[1] == fs[1]) && ms[2..] == fs[2..];
    if !ok {
        return Err(Error::Shape(format!("occlusion mask {ms:?} does not fit features {fs:?}")));
    }
    Ok(features.mul(mask))
}

/// Bilinearly resamples a coordinate field to `h x w`.
pub fn resize_flow<T: Element>(flow: &Tensor<T>, h: usize, w: usize) -> Tensor<T> {
    if flow.dim(1) == h && flow.dim(2) == w {
        return flow.clone();
    }
    flow.permute(&[0, 3, 1, 2]).resize_bilinear(h, w).permute(&[0, 2, 3, 1])
}

/// Bilinearly resamples a `[B, C, h, w]` map.
pub fn resize_map<T: Element>(map: &Tensor<T>, h: usize, w: usize) -> Tensor<T> {
    if map.dim(2) == h && map.dim(3) == w {
        return map.clone();
    }
    map.resize_bilinear(h, w)
}
