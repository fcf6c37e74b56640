use adasr_tensor::{Element, Tensor};

use crate::{Error, Result};

/// Tolerance for orthonormality and determinant checks on rotations.
pub const ROTATION_TOLERANCE: f64 = 1e-5;
/// Smallest driving-Jacobian determinant accepted by sparse motion.
pub const JACOBIAN_DET_TOLERANCE: f64 = 1e-6;

/// A 3D keypoint: normalized image position plus depth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub depth: f64,
}

impl Keypoint {
    pub fn new(x: f64, y: f64, depth: f64) -> Self {
        Self { x, y, depth }
    }
}

pub type Mat2 = [[f64; 2]; 2];
pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY2: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Keypoints with optional per-keypoint 2x2 Jacobians.
#[derive(Clone, Debug, PartialEq)]
pub struct KeypointSet {
    pub points: Vec<Keypoint>,
    pub jacobians: Option<Vec<Mat2>>,
}

impl KeypointSet {
    pub fn new(points: Vec<Keypoint>, jacobians: Option<Vec<Mat2>>) -> Result<Self> {
        let set = Self { points, jacobians };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Jacobian `k`, identity when none are stored.
    pub fn jacobian(&self, k: usize) -> Mat2 {
        self.jacobians.as_ref().map_or(IDENTITY2, |j| j[k])
    }

    pub fn validate(&self) -> Result<()> {
        for (k, p) in self.points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.depth.is_finite()) {
                return Err(Error::Validation(format!("keypoint {k} is not finite")));
            }
        }
        if let Some(j) = &self.jacobians {
            if j.len() != self.points.len() {
                return Err(Error::Shape(format!(
                    "{} Jacobians for {} keypoints",
                    j.len(),
                    self.points.len()
                )));
            }
            if let Some(k) = j.iter().position(|m| m.iter().flatten().any(|v| !v.is_finite())) {
                return Err(Error::Validation(format!("Jacobian {k} is not finite")));
            }
        }
        Ok(())
    }
}

/// Rotation, translation and per-keypoint expression deltas.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionParams {
    pub rotation: Mat3,
    pub translation: [f64; 3],
    pub deltas: Vec<[f64; 3]>,
}

/// `Rz(yaw) * Ry(pitch) * Rx(roll)`; yaw turns the x axis toward the y axis.
pub fn rotation_from_euler(yaw: f64, pitch: f64, roll: f64) -> Mat3 {
    let (sa, ca) = yaw.sin_cos();
    let (sb, cb) = pitch.sin_cos();
    let (sc, cc) = roll.sin_cos();
    [
        [ca * cb, ca * sb * sc - sa * cc, ca * sb * cc + sa * sc],
        [sa * cb, sa * sb * sc + ca * cc, sa * sb * cc - ca * sc],
        [-sb, cb * sc, cb * cc],
    ]
}

/// Inverse of [`rotation_from_euler`] for pitch inside `(-pi/2, pi/2)`.
pub fn euler_from_rotation(r: &Mat3) -> [f64; 3] {
    let pitch = (-r[2][0]).clamp(-1.0, 1.0).asin();
    [r[1][0].atan2(r[0][0]), pitch, r[2][1].atan2(r[2][2])]
}

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat3_transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn mat3_vec(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| (0..3).map(|k| a[i][k] * v[k]).sum())
}

fn det3(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

impl MotionParams {
    pub fn new(rotation: Mat3, translation: [f64; 3], deltas: Vec<[f64; 3]>) -> Result<Self> {
        let mp = Self { rotation, translation, deltas };
        mp.validate()?;
        Ok(mp)
    }

    pub fn from_euler(euler: [f64; 3], translation: [f64; 3], deltas: Vec<[f64; 3]>) -> Result<Self> {
        Self::new(rotation_from_euler(euler[0], euler[1], euler[2]), translation, deltas)
    }

    /// No rotation, translation or expression for `k` keypoints.
    pub fn identity(k: usize) -> Self {
        Self { rotation: IDENTITY3, translation: [0.0; 3], deltas: vec![[0.0; 3]; k] }
    }

    /// `(yaw, pitch, roll)` of the rotation.
    pub fn euler(&self) -> [f64; 3] {
        euler_from_rotation(&self.rotation)
    }

    pub fn validate(&self) -> Result<()> {
        let flat = self.rotation.iter().flatten().chain(&self.translation).chain(self.deltas.iter().flatten());
        if flat.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("motion parameters must be finite".into()));
        }
        let rtr = mat3_mul(&mat3_transpose(&self.rotation), &self.rotation);
        for (i, row) in rtr.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (v - expected).abs() > ROTATION_TOLERANCE {
                    return Err(Error::Validation(format!(
                        "rotation is not orthonormal: (R^T R)[{i}][{j}] = {v}"
                    )));
                }
            }
        }
        let det = det3(&self.rotation);
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::Validation(format!("rotation determinant is {det}, expected +1")));
        }
        Ok(())
    }
}

/// Batched keypoints for differentiable use: `points` is `[B, K, 3]`
/// (x, y, depth) and `jacobians` is `[B, K, 2, 2]`.
#[derive(Clone, Debug)]
pub struct KeypointTensors<T: Element = f32> {
    pub points: Tensor<T>,
    pub jacobians: Option<Tensor<T>>,
}

/// Batched motion parameters: `rotation [B, 3, 3]`, `translation [B, 3]`,
/// `deltas [B, K, 3]`, and the Euler angles `[B, 3]` when predicted.
#[derive(Clone, Debug)]
pub struct MotionTensors<T: Element = f32> {
    pub rotation: Tensor<T>,
    pub translation: Tensor<T>,
    pub deltas: Tensor<T>,
    pub euler: Option<Tensor<T>>,
}

impl<T: Element> KeypointTensors<T> {
    pub fn batch(&self) -> usize {
        self.points.dim(0)
    }

    pub fn count(&self) -> usize {
        self.points.dim(1)
    }

    /// `[B, K, 2]` image-plane positions.
    pub fn positions(&self) -> Tensor<T> {
        self.points.narrow(2, 0, 2)
    }

    pub fn detach(&self) -> Self {
        Self { points: self.points.detach(), jacobians: self.jacobians.as_ref().map(|j| j.detach()) }
    }

    pub fn from_sets(sets: &[KeypointSet]) -> Result<Self> {
        let k = sets.first().map_or(0, |s| s.len());
        if sets.is_empty() || sets.iter().any(|s| s.len() != k) {
            return Err(Error::Shape("keypoint sets must be nonempty with equal K".into()));
        }
        let points: Vec<f64> = sets.iter().flat_map(|s| s.points.iter().flat_map(|p| [p.x, p.y, p.depth])).collect();
        let with_jac = sets.iter().any(|s| s.jacobians.is_some());
        let jacobians = with_jac.then(|| {
            let flat: Vec<f64> =
                sets.iter().flat_map(|s| (0..k).flat_map(move |i| s.jacobian(i).into_iter().flatten())).collect();
            Tensor::from_f64s(&flat, &[sets.len(), k, 2, 2])
        });
        Ok(Self { points: Tensor::from_f64s(&points, &[sets.len(), k, 3]), jacobians })
    }

    pub fn to_sets(&self) -> Vec<KeypointSet> {
        let (b, k) = (self.batch(), self.count());
        let p = self.points.to_f64_vec();
        let j = self.jacobians.as_ref().map(|j| j.to_f64_vec());
        (0..b)
            .map(|bi| KeypointSet {
                points: (0..k)
                    .map(|i| {
                        let o = (bi * k + i) * 3;
                        Keypoint::new(p[o], p[o + 1], p[o + 2])
                    })
                    .collect(),
                jacobians: j.as_ref().map(|j| {
                    (0..k)
                        .map(|i| {
                            let o = (bi * k + i) * 4;
                            [[j[o], j[o + 1]], [j[o + 2], j[o + 3]]]
                        })
                        .collect()
                }),
            })
            .collect()
    }
}

impl<T: Element> MotionTensors<T> {
    pub fn batch(&self) -> usize {
        self.rotation.dim(0)
    }

    pub fn detach(&self) -> Self {
        Self {
            rotation: self.rotation.detach(),
            translation: self.translation.detach(),
            deltas: self.deltas.detach(),
            euler: self.euler.as_ref().map(|e| e.detach()),
        }
    }

    pub fn from_params(params: &[MotionParams]) -> Result<Self> {
        let k = params.first().map_or(0, |p| p.deltas.len());
        if params.is_empty() || params.iter().any(|p| p.deltas.len() != k) {
            return Err(Error::Shape("motion parameters must be nonempty with equal K".into()));
        }
        let b = params.len();
        let rot: Vec<f64> = params.iter().flat_map(|p| p.rotation.into_iter().flatten()).collect();
        let tr: Vec<f64> = params.iter().flat_map(|p| p.translation).collect();
        let de: Vec<f64> = params.iter().flat_map(|p| p.deltas.iter().flatten().copied()).collect();
        let eu: Vec<f64> = params.iter().flat_map(|p| p.euler()).collect();
        Ok(Self {
            rotation: Tensor::from_f64s(&rot, &[b, 3, 3]),
            translation: Tensor::from_f64s(&tr, &[b, 3]),
            deltas: Tensor::from_f64s(&de, &[b, k, 3]),
            euler: Some(Tensor::from_f64s(&eu, &[b, 3])),
        })
    }

    pub fn to_params(&self) -> Vec<MotionParams> {
        let (b, k) = (self.batch(), self.deltas.dim(1));
        let r = self.rotation.to_f64_vec();
        let t = self.translation.to_f64_vec();
        let d = self.deltas.to_f64_vec();
        (0..b)
            .map(|i| MotionParams {
                rotation: [0, 1, 2].map(|row| [0, 1, 2].map(|col| r[i * 9 + row * 3 + col])),
                translation: [t[i * 3], t[i * 3 + 1], t[i * 3 + 2]],
                deltas: (0..k).map(|j| [0, 1, 2].map(|c| d[(i * k + j) * 3 + c])).collect(),
            })
            .collect()
    }
}
