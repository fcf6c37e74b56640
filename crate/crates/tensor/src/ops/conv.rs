//! Convolution, pooling and resampling over `[N, C, H, W]` tensors.

use crate::element::gemm;
use crate::{Element, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conv2dOptions {
    pub stride: usize,
    pub padding: usize,
}

impl Default for Conv2dOptions {
    fn default() -> Self {
        Self { stride: 1, padding: 0 }
    }
}

impl Conv2dOptions {
    pub fn new(stride: usize, padding: usize) -> Self {
        Self { stride, padding }
    }

    /// Stride 1 with padding preserving the spatial size for an odd kernel.
    pub fn same(kernel: usize) -> Self {
        Self { stride: 1, padding: kernel / 2 }
    }
}

#[derive(Clone, Copy)]
struct ConvGeom {
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    ho: usize,
    wo: usize,
}

impl ConvGeom {
    fn col_rows(&self) -> usize {
        self.c * self.kh * self.kw
    }

    fn col_cols(&self) -> usize {
        self.ho * self.wo
    }

    fn is_pointwise(&self) -> bool {
        self.kh == 1 && self.kw == 1 && self.stride == 1 && self.pad == 0
    }
}

fn im2col<T: Element>(x: &[T], g: &ConvGeom, cols: &mut [T]) {
    let plane = g.col_cols();
    for c in 0..g.c {
        let xc = &x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let dst = &mut cols[row * plane..(row + 1) * plane];
                for oy in 0..g.ho {
                    let iy = (oy * g.stride + ki) as isize - g.pad as isize;
                    let line = &mut dst[oy * g.wo..(oy + 1) * g.wo];
                    if iy < 0 || iy >= g.h as isize {
                        line.fill(T::zero());
                        continue;
                    }
                    let src = &xc[iy as usize * g.w..(iy as usize + 1) * g.w];
                    for (ox, v) in line.iter_mut().enumerate() {
                        let ix = (ox * g.stride + kj) as isize - g.pad as isize;
                        *v = if ix < 0 || ix >= g.w as isize { T::zero() } else { src[ix as usize] };
                    }
                }
            }
        }
    }
}

fn col2im<T: Element>(cols: &[T], g: &ConvGeom, x: &mut [T]) {
    let plane = g.col_cols();
    for c in 0..g.c {
        let xc = &mut x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let src = &cols[row * plane..(row + 1) * plane];
                for oy in 0..g.ho {
                    let iy = (oy * g.stride + ki) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    let dst = &mut xc[iy as usize * g.w..(iy as usize + 1) * g.w];
                    for ox in 0..g.wo {
                        let ix = (ox * g.stride + kj) as isize - g.pad as isize;
                        if ix >= 0 && ix < g.w as isize {
                            dst[ix as usize] += src[oy * g.wo + ox];
                        }
                    }
                }
            }
        }
    }
}

impl<T: Element> Tensor<T> {
    /// 2D cross-correlation with zero padding. `weight` is `[O, C, KH, KW]`,
    /// `bias` is `[O]`.
    pub fn conv2d(&self, weight: &Tensor<T>, bias: Option<&Tensor<T>>, opts: Conv2dOptions) -> Tensor<T> {
        let xs = self.shape();
        let ws = weight.shape();
        assert_eq!(xs.len(), 4, "conv2d input must be NCHW, got {xs:?}");
        assert_eq!(ws.len(), 4, "conv2d weight must be OCKK, got {ws:?}");
        assert_eq!(xs[1], ws[1], "conv2d channel mismatch: input {xs:?}, weight {ws:?}");
        let (n, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let (o, kh, kw) = (ws[0], ws[2], ws[3]);
        assert!(h + 2 * opts.padding >= kh && w + 2 * opts.padding >= kw, "kernel larger than input");
        let geom = ConvGeom {
            c,
            h,
            w,
            kh,
            kw,
            stride: opts.stride,
            pad: opts.padding,
            ho: (h + 2 * opts.padding - kh) / opts.stride + 1,
            wo: (w + 2 * opts.padding - kw) / opts.stride + 1,
        };
        if let Some(b) = bias {
            assert_eq!(b.shape(), &[o], "conv2d bias must be [{o}]");
        }
        let (rows, plane) = (geom.col_rows(), geom.col_cols());
        let mut out = vec![T::zero(); n * o * plane];
        let mut cols = if geom.is_pointwise() { Vec::new() } else { vec![T::zero(); rows * plane] };
        let (xd, wd) = (self.data(), weight.data());
        for b in 0..n {
            let xb = &xd[b * c * h * w..(b + 1) * c * h * w];
            let cols_ref: &[T] = if geom.is_pointwise() {
                xb
            } else {
                im2col(xb, &geom, &mut cols);
                &cols
            };
            let ob = &mut out[b * o * plane..(b + 1) * o * plane];
            gemm(o, rows, plane, wd, false, cols_ref, false, ob, false);
            if let Some(bias) = bias {
                for (oc, &bv) in bias.data().iter().enumerate() {
                    ob[oc * plane..(oc + 1) * plane].iter_mut().for_each(|v| *v += bv);
                }
            }
        }
        let mut parents = vec![self.clone(), weight.clone()];
        if let Some(b) = bias {
            parents.push(b.clone());
        }
        Tensor::from_op(
            out,
            vec![n, o, geom.ho, geom.wo],
            parents,
            Box::new(move |g, _, parents, needs| {
                let (xd, wd) = (parents[0].data(), parents[1].data());
                let mut gx = needs[0].then(|| vec![T::zero(); n * c * h * w]);
                let mut gw = needs[1].then(|| vec![T::zero(); o * rows]);
                let mut cols = vec![T::zero(); rows * plane];
                let mut gcols = vec![T::zero(); rows * plane];
                for b in 0..n {
                    let gb = &g[b * o * plane..(b + 1) * o * plane];
                    let xb = &xd[b * c * h * w..(b + 1) * c * h * w];
                    if let Some(gw) = gw.as_mut() {
                        let cols_ref: &[T] = if geom.is_pointwise() {
                            xb
                        } else {
                            im2col(xb, &geom, &mut cols);
                            &cols
                        };
                        gemm(o, plane, rows, gb, false, cols_ref, true, gw, true);
                    }
                    if let Some(gx) = gx.as_mut() {
                        let gxb = &mut gx[b * c * h * w..(b + 1) * c * h * w];
                        if geom.is_pointwise() {
                            gemm(rows, o, plane, wd, true, gb, false, gxb, false);
                        } else {
                            gemm(rows, o, plane, wd, true, gb, false, &mut gcols, false);
                            col2im(&gcols, &geom, gxb);
                        }
                    }
                }
                let mut grads = vec![gx, gw];
                if parents.len() == 3 {
                    grads.push(needs[2].then(|| {
                        let mut gbias = vec![T::zero(); o];
                        for b in 0..n {
                            for (oc, acc) in gbias.iter_mut().enumerate() {
                                let base = (b * o + oc) * plane;
                                *acc += g[base..base + plane].iter().copied().sum::<T>();
                            }
                        }
                        gbias
                    }));
                }
                grads
            }),
        )
    }

    /// Non-overlapping average pooling with a `k x k` window.
    pub fn avg_pool2d(&self, k: usize) -> Tensor<T> {
        let s = self.shape();
        assert_eq!(s.len(), 4);
        let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
        assert!(h % k == 0 && w % k == 0, "avg_pool2d({k}) needs divisible size, got {s:?}");
        let (ho, wo) = (h / k, w / k);
        let scale = T::of(1.0 / (k * k) as f64);
        let d = self.data();
        let mut out = vec![T::zero(); n * c * ho * wo];
        for p in 0..n * c {
            let src = &d[p * h * w..(p + 1) * h * w];
            let dst = &mut out[p * ho * wo..(p + 1) * ho * wo];
            for y in 0..h {
                for x in 0..w {
                    dst[(y / k) * wo + x / k] += src[y * w + x];
                }
            }
            dst.iter_mut().for_each(|v| *v *= scale);
        }
        Tensor::from_op(
            out,
            vec![n, c, ho, wo],
            vec![self.clone()],
            Box::new(move |g, _, _, _| {
                let mut gi = vec![T::zero(); n * c * h * w];
                for p in 0..n * c {
                    for y in 0..h {
                        for x in 0..w {
                            gi[p * h * w + y * w + x] = g[p * ho * wo + (y / k) * wo + x / k] * scale;
                        }
                    }
                }
                vec![Some(gi)]
            }),
        )
    }

    /// Bilinear resize with corner-aligned sampling, the convention used by
    /// normalized grids (`-1` and `+1` hit the outer pixel centers).
    pub fn resize_bilinear(&self, out_h: usize, out_w: usize) -> Tensor<T> {
        let s = self.shape();
        assert_eq!(s.len(), 4);
        let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
        if (h, w) == (out_h, out_w) {
            return self.clone();
        }
        let ty = linear_taps::<T>(h, out_h);
        let tx = linear_taps::<T>(w, out_w);
        let d = self.data();
        let mut out = vec![T::zero(); n * c * out_h * out_w];
        let mut rows = vec![T::zero(); out_h * w];
        for p in 0..n * c {
            let src = &d[p * h * w..(p + 1) * h * w];
            for (oy, &(y0, y1, fy)) in ty.iter().enumerate() {
                for x in 0..w {
                    rows[oy * w + x] = src[y0 * w + x] * (T::one() - fy) + src[y1 * w + x] * fy;
                }
            }
            let dst = &mut out[p * out_h * out_w..(p + 1) * out_h * out_w];
            for oy in 0..out_h {
                for (ox, &(x0, x1, fx)) in tx.iter().enumerate() {
                    dst[oy * out_w + ox] = rows[oy * w + x0] * (T::one() - fx) + rows[oy * w + x1] * fx;
                }
            }
        }
        Tensor::from_op(
            out,
            vec![n, c, out_h, out_w],
            vec![self.clone()],
            Box::new(move |g, _, _, _| {
                let mut gi = vec![T::zero(); n * c * h * w];
                let mut rows = vec![T::zero(); out_h * w];
                for p in 0..n * c {
                    rows.fill(T::zero());
                    let gp = &g[p * out_h * out_w..(p + 1) * out_h * out_w];
                    for oy in 0..out_h {
                        for (ox, &(x0, x1, fx)) in tx.iter().enumerate() {
                            let v = gp[oy * out_w + ox];
                            rows[oy * w + x0] += v * (T::one() - fx);
                            rows[oy * w + x1] += v * fx;
                        }
                    }
                    let dst = &mut gi[p * h * w..(p + 1) * h * w];
                    for (oy, &(y0, y1, fy)) in ty.iter().enumerate() {
                        for x in 0..w {
                            let v = rows[oy * w + x];
                            dst[y0 * w + x] += v * (T::one() - fy);
                            dst[y1 * w + x] += v * fy;
                        }
                    }
                }
                vec![Some(gi)]
            }),
        )
    }
}

/// For each output index: the two source taps and the weight of the second.
fn linear_taps<T: Element>(src: usize, dst: usize) -> Vec<(usize, usize, T)> {
    (0..dst)
        .map(|o| {
            if src == 1 || dst == 1 {
                return (0, 0, T::zero());
            }
            let pos = o as f64 * (src - 1) as f64 / (dst - 1) as f64;
            let i0 = (pos.floor() as usize).min(src - 2);
            (i0, i0 + 1, T::of(pos - i0 as f64))
        })
        .collect()
}
