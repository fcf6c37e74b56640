use serde::{Deserialize, Serialize};

/// Interpolation kernels for image resizing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResizeKernel {
    Area,
    Bilinear,
    Bicubic,
}

impl ResizeKernel {
    pub const ALL: [ResizeKernel; 3] = [ResizeKernel::Area, ResizeKernel::Bilinear, ResizeKernel::Bicubic];
}

fn cubic(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x < 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Per-output-sample `(first input index, weights)` along one axis, using
/// pixel-center alignment. Filters widen when shrinking to avoid aliasing.
fn axis_weights(input: usize, output: usize, kernel: ResizeKernel) -> Vec<(usize, Vec<f64>)> {
    let scale = input as f64 / output as f64;
    (0..output)
        .map(|o| {
            if kernel == ResizeKernel::Area {
                let (lo, hi) = (o as f64 * scale, (o + 1) as f64 * scale);
                let first = lo.floor() as usize;
                let last = (hi.ceil() as usize).min(input);
                let w: Vec<f64> = (first..last)
                    .map(|i| (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0))
                    .collect();
                return normalized(first, w);
            }
            let (radius, f): (f64, fn(f64) -> f64) = match kernel {
                ResizeKernel::Bilinear => (1.0, |x: f64| (1.0 - x.abs()).max(0.0)),
                _ => (2.0, cubic),
            };
            let support = scale.max(1.0);
            let center = (o as f64 + 0.5) * scale - 0.5;
            let first = (center - radius * support).floor() as isize;
            let last = (center + radius * support).ceil() as isize;
            // taps outside the image fold onto the border pixel
            let mut dense = vec![0.0; input];
            for i in first..=last {
                let w = f((i as f64 - center) / support);
                if w != 0.0 {
                    dense[i.clamp(0, input as isize - 1) as usize] += w;
                }
            }
            let start = dense.iter().position(|&w| w != 0.0).unwrap_or(0);
            let end = dense.iter().rposition(|&w| w != 0.0).map_or(start + 1, |e| e + 1);
            normalized(start, dense[start..end].to_vec())
        })
        .collect()
}

fn normalized(first: usize, mut w: Vec<f64>) -> (usize, Vec<f64>) {
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    (first, w)
}

/// Resizes planar `channels x h x w` data to `oh x ow`. Results are clamped
/// to `[0, 1]` since cubic filters overshoot.
pub fn resize_planar(
    data: &[f32],
    channels: usize,
    h: usize,
    w: usize,
    oh: usize,
    ow: usize,
    kernel: ResizeKernel,
) -> Vec<f32> {
    assert_eq!(data.len(), channels * h * w, "resize input size mismatch");
    if (oh, ow) == (h, w) {
        return data.to_vec();
    }
    let wx = axis_weights(w, ow, kernel);
    let wy = axis_weights(h, oh, kernel);
    let mut out = Vec::with_capacity(channels * oh * ow);
    let mut rows = vec![0.0f64; h * ow];
    for c in 0..channels {
        let plane = &data[c * h * w..(c + 1) * h * w];
        for y in 0..h {
            let src = &plane[y * w..(y + 1) * w];
            for (x, (first, ws)) in wx.iter().enumerate() {
                rows[y * ow + x] = ws.iter().enumerate().map(|(k, &wt)| wt * src[first + k] as f64).sum();
            }
        }
        for (first, ws) in &wy {
            for x in 0..ow {
                let v: f64 = ws.iter().enumerate().map(|(k, &wt)| wt * rows[(first + k) * ow + x]).sum();
                out.push(v.clamp(0.0, 1.0) as f32);
            }
        }
    }
    out
}
