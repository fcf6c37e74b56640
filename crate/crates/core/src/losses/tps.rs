use adasr_tensor::{Element, Tensor};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Side of the control-point lattice of random warps.
pub const CONTROL_GRID: usize = 5;
/// Standard deviation of control-point perturbations in normalized units.
pub const CONTROL_SIGMA: f64 = 0.05;

/// Thin-plate-spline map of the normalized plane,
/// `T(z) = a0 + A z + sum_i w_i U(|z - c_i|^2)` with `U(s) = s ln s`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThinPlateSpline {
    centers: Vec<[f64; 2]>,
    /// Per center, per output coordinate.
    weights: Vec<[f64; 2]>,
    /// Rows: constant, x, y; columns: output x, y.
    affine: [[f64; 2]; 3],
}

fn kernel(s: f64) -> f64 {
    if s > 0.0 {
        s * s.ln()
    } else {
        0.0
    }
}

impl ThinPlateSpline {
    pub fn identity() -> Self {
        Self { centers: Vec::new(), weights: Vec::new(), affine: [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Interpolating spline sending each `centers[i]` to `targets[i]`.
    pub fn fit(centers: &[[f64; 2]], targets: &[[f64; 2]]) -> Result<Self> {
        let n = centers.len();
        if n != targets.len() || n < 3 {
            return Err(Error::Shape(format!("spline needs >= 3 matching points, got {n} and {}", targets.len())));
        }
        let mut l = DMatrix::<f64>::zeros(n + 3, n + 3);
        for i in 0..n {
            for j in 0..n {
                let d2 = (centers[i][0] - centers[j][0]).powi(2) + (centers[i][1] - centers[j][1]).powi(2);
                l[(i, j)] = kernel(d2);
            }
            let p = [1.0, centers[i][0], centers[i][1]];
            for (k, v) in p.into_iter().enumerate() {
                l[(i, n + k)] = v;
                l[(n + k, i)] = v;
            }
        }
        let lu = l.lu();
        let mut weights = vec![[0.0; 2]; n];
        let mut affine = [[0.0; 2]; 3];
        for d in 0..2 {
            let mut rhs = DVector::<f64>::zeros(n + 3);
            for i in 0..n {
                rhs[i] = targets[i][d];
            }
            let sol = lu.solve(&rhs).ok_or_else(|| Error::Numeric("degenerate spline control points".into()))?;
            for i in 0..n {
                weights[i][d] = sol[i];
            }
            for k in 0..3 {
                affine[k][d] = sol[n + k];
            }
        }
        Ok(Self { centers: centers.to_vec(), weights, affine })
    }

    /// Random warp: a `grid x grid` lattice on `[-1, 1]^2` whose points are
    /// displaced by `N(0, sigma^2)` noise.
    pub fn random(grid: usize, sigma: f64, rng: &mut impl Rng) -> Result<Self> {
        if grid < 2 {
            return Err(Error::config("equivariance.grid", "control grid needs at least 2 points per side"));
        }
        let noise = Normal::new(0.0, sigma).map_err(|e| Error::config("equivariance.sigma", e.to_string()))?;
        let step = 2.0 / (grid - 1) as f64;
        let centers: Vec<[f64; 2]> = (0..grid * grid)
            .map(|i| [-1.0 + (i % grid) as f64 * step, -1.0 + (i / grid) as f64 * step])
            .collect();
        let targets: Vec<[f64; 2]> =
            centers.iter().map(|c| [c[0] + noise.sample(rng), c[1] + noise.sample(rng)]).collect();
        Self::fit(&centers, &targets)
    }

    /// Pure translation by `(dx, dy)`.
    pub fn translation(dx: f64, dy: f64) -> Self {
        Self { centers: Vec::new(), weights: Vec::new(), affine: [[dx, dy], [1.0, 0.0], [0.0, 1.0]] }
    }

    pub fn apply_point(&self, z: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (d, o) in out.iter_mut().enumerate() {
            *o = self.affine[0][d] + self.affine[1][d] * z[0] + self.affine[2][d] * z[1];
            for (c, w) in self.centers.iter().zip(&self.weights) {
                *o += w[d] * kernel((z[0] - c[0]).powi(2) + (z[1] - c[1]).powi(2));
            }
        }
        out
    }

    /// Differentiable map of points `[..., 2]`.
    pub fn apply<T: Element>(&self, points: &Tensor<T>) -> Tensor<T> {
        let shape = points.shape().to_vec();
        let n = points.numel() / 2;
        let z = points.reshape(&[n, 2]);
        let linear = Tensor::from_f64s(&[self.affine[1][0], self.affine[1][1], self.affine[2][0], self.affine[2][1]], &[2, 2]);
        let mut out = z.matmul(&linear).add(&Tensor::from_f64s(&self.affine[0], &[1, 2]));
        if !self.centers.is_empty() {
            let m = self.centers.len();
            let c: Vec<f64> = self.centers.iter().flatten().copied().collect();
            let w: Vec<f64> = self.weights.iter().flatten().copied().collect();
            let d2 = z
                .reshape(&[n, 1, 2])
                .sub(&Tensor::from_f64s(&c, &[1, m, 2]))
                .square()
                .sum_axes(&[2])
                .reshape(&[n, m]);
            let u = d2.map(
                |s| if s > T::zero() { s * s.ln() } else { T::zero() },
                |s, _| if s > T::zero() { s.ln() + T::one() } else { T::zero() },
            );
            out = out.add(&u.matmul(&Tensor::from_f64s(&w, &[m, 2])));
        }
        out.reshape(&shape)
    }

    /// Sampling grid `[b, h, w, 2]` that resamples an image through the map.
    pub fn grid<T: Element>(&self, b: usize, h: usize, w: usize) -> Tensor<T> {
        let g = self.apply(&Tensor::<T>::identity_grid(1, h, w));
        if b == 1 {
            g
        } else {
            g.broadcast_to(&[b, h, w, 2])
        }
    }
}
