use crate::{Element, Tensor};

/// Sampling positions closer than this (in pixels) to a lattice point snap to
/// it, so integer displacements reproduce pixel values exactly.
const SNAP_PX: f64 = 1e-5;

struct Tap<T> {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
    fx: T,
    fy: T,
    // d(pixel coordinate)/d(normalized coordinate), zero where clamped
    dx: T,
    dy: T,
}

fn axis_tap<T: Element>(coord: T, size: usize) -> (usize, usize, T, T) {
    if size == 1 {
        return (0, 0, T::zero(), T::zero());
    }
    let scale = (size - 1) as f64 * 0.5;
    let mut p = (coord.as_f64() + 1.0) * scale;
    let max = (size - 1) as f64;
    let inside = (0.0..=max).contains(&p);
    p = p.clamp(0.0, max);
    let r = p.round();
    if (p - r).abs() < SNAP_PX {
        p = r;
    }
    let i0 = (p.floor() as usize).min(size - 2);
    let f = p - i0 as f64;
    (i0, i0 + 1, T::of(f), if inside { T::of(scale) } else { T::zero() })
}

impl<T: Element> Tensor<T> {
    /// Bilinear backward sampling of `[N, C, H, W]` at `grid` `[N, Ho, Wo, 2]`
    /// holding normalized `(x, y)`; positions outside the image clamp to the
    /// border.
    pub fn grid_sample(&self, grid: &Tensor<T>) -> Tensor<T> {
        let s = self.shape();
        let gs = grid.shape();
        assert_eq!(s.len(), 4, "grid_sample input must be NCHW");
        assert!(gs.len() == 4 && gs[3] == 2, "grid must be [N, H, W, 2], got {gs:?}");
        assert_eq!(s[0], gs[0], "grid_sample batch mismatch");
        let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
        let (ho, wo) = (gs[1], gs[2]);
        let taps: Vec<Tap<T>> = grid
            .data()
            .chunks_exact(2)
            .map(|xy| {
                let (x0, x1, fx, dx) = axis_tap(xy[0], w);
                let (y0, y1, fy, dy) = axis_tap(xy[1], h);
                Tap { x0, y0, x1, y1, fx, fy, dx, dy }
            })
            .collect();
        let d = self.data();
        let mut out = vec![T::zero(); n * c * ho * wo];
        let one = T::one();
        for b in 0..n {
            for ch in 0..c {
                let src = &d[(b * c + ch) * h * w..(b * c + ch + 1) * h * w];
                let dst = &mut out[(b * c + ch) * ho * wo..(b * c + ch + 1) * ho * wo];
                for (i, v) in dst.iter_mut().enumerate() {
                    let t = &taps[b * ho * wo + i];
                    let top = src[t.y0 * w + t.x0] * (one - t.fx) + src[t.y0 * w + t.x1] * t.fx;
                    let bot = src[t.y1 * w + t.x0] * (one - t.fx) + src[t.y1 * w + t.x1] * t.fx;
                    *v = top * (one - t.fy) + bot * t.fy;
                }
            }
        }
        Tensor::from_op(
            out,
            vec![n, c, ho, wo],
            vec![self.clone(), grid.clone()],
            Box::new(move |g, _, parents, needs| {
                let d = parents[0].data();
                let mut gin = needs[0].then(|| vec![T::zero(); n * c * h * w]);
                let mut ggrid = needs[1].then(|| vec![T::zero(); n * ho * wo * 2]);
                for b in 0..n {
                    for ch in 0..c {
                        let base = (b * c + ch) * h * w;
                        let src = &d[base..base + h * w];
                        let gp = &g[(b * c + ch) * ho * wo..(b * c + ch + 1) * ho * wo];
                        for (i, &gv) in gp.iter().enumerate() {
                            let t = &taps[b * ho * wo + i];
                            if let Some(gin) = gin.as_mut() {
                                let gi = &mut gin[base..base + h * w];
                                gi[t.y0 * w + t.x0] += gv * (one - t.fx) * (one - t.fy);
                                gi[t.y0 * w + t.x1] += gv * t.fx * (one - t.fy);
                                gi[t.y1 * w + t.x0] += gv * (one - t.fx) * t.fy;
                                gi[t.y1 * w + t.x1] += gv * t.fx * t.fy;
                            }
                            if let Some(gg) = ggrid.as_mut() {
                                let (v00, v01) = (src[t.y0 * w + t.x0], src[t.y0 * w + t.x1]);
                                let (v10, v11) = (src[t.y1 * w + t.x0], src[t.y1 * w + t.x1]);
                                let dfx = (v01 - v00) * (one - t.fy) + (v11 - v10) * t.fy;
                                let dfy = (v10 - v00) * (one - t.fx) + (v11 - v01) * t.fx;
                                let k = (b * ho * wo + i) * 2;
                                gg[k] += gv * dfx * t.dx;
                                gg[k + 1] += gv * dfy * t.dy;
                            }
                        }
                    }
                }
                vec![gin, ggrid]
            }),
        )
    }

    /// Identity sampling grid `[n, h, w, 2]` in normalized coordinates.
    pub fn identity_grid(n: usize, h: usize, w: usize) -> Tensor<T> {
        let coord = |i: usize, size: usize| {
            if size == 1 {
                0.0
            } else {
                -1.0 + 2.0 * i as f64 / (size - 1) as f64
            }
        };
        let mut data = Vec::with_capacity(n * h * w * 2);
        for _ in 0..n {
            for y in 0..h {
                for x in 0..w {
                    data.push(T::of(coord(x, w)));
                    data.push(T::of(coord(y, h)));
                }
            }
        }
        Tensor::from_vec(data, &[n, h, w, 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_grid_reproduces_input() {
        let vals: Vec<f32> = (0..2 * 3 * 5 * 7).map(|i| (i as f32 * 0.37).sin()).collect();
        let x = Tensor::<f32>::from_vec(vals, &[2, 3, 5, 7]);
        let y = x.grid_sample(&Tensor::identity_grid(2, 5, 7));
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn half_pixel_shift_averages_neighbours() {
        let x = Tensor::<f64>::from_f64s(&[0.0, 1.0, 4.0], &[1, 1, 1, 3]);
        // x = 0 maps to pixel coordinate 1.0; -0.5 maps to 0.5
        let grid = Tensor::<f64>::from_f64s(&[-0.5, 0.0, 0.5, 0.0], &[1, 1, 2, 2]);
        let y = x.grid_sample(&grid);
        assert_eq!(y.to_vec(), vec![0.5, 2.5]);
    }
}
