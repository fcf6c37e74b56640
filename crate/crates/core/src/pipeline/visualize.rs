use std::path::{Path, PathBuf};

use adasr_tensor::Tensor;

use crate::media_io::{write_png, Frame};
use crate::networks::Model;
use crate::Result;

/// Files written by [`visualize_features`] and the mean absolute Laplacian
/// of every rendered feature map (before normalization).
#[derive(Clone, Debug)]
pub struct FeatureVisualization {
    pub files: Vec<PathBuf>,
    /// `(label, energy)` per feature map.
    pub high_frequency_energy: Vec<(String, f64)>,
}

/// Channel mean of map `b` in `[B, C, H, W]`.
fn channel_mean(t: &Tensor<f32>, b: usize) -> (Vec<f64>, usize, usize) {
    let (c, h, w) = (t.dim(1), t.dim(2), t.dim(3));
    let data = t.data();
    let mut out = vec![0.0; h * w];
    for ch in 0..c {
        let base = (b * c + ch) * h * w;
        for (o, v) in out.iter_mut().zip(&data[base..base + h * w]) {
            *o += *v as f64 / c as f64;
        }
    }
    (out, h, w)
}

/// Mean `|4 x - neighbors|` over interior pixels.
pub fn laplacian_energy(map: &[f64], h: usize, w: usize) -> f64 {
    if h < 3 || w < 3 {
        return 0.0;
    }
    let mut total = 0.0;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let c = map[y * w + x];
            let lap = 4.0 * c - map[(y - 1) * w + x] - map[(y + 1) * w + x] - map[y * w + x - 1] - map[y * w + x + 1];
            total += lap.abs();
        }
    }
    total / ((h - 2) * (w - 2)) as f64
}

/// Min-max normalizes a single-channel map into a gray frame.
fn gray_frame(map: &[f64], h: usize, w: usize) -> Result<Frame> {
    let lo = map.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = map.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let norm: Vec<f32> =
        map.iter().map(|v| if span > 0.0 { ((v - lo) / span) as f32 } else { 0.0 }).collect();
    Frame::from_fn(h, w, |_, y, x| norm[y * w + x])
}

/// Renders feature maps before warping (two shallowest encoder scales),
/// after warping (two deepest warped scales), the flow displacement and the
/// occlusion map for one source/driving pair.
pub fn visualize_features(model: &Model, source: &Frame, driving: &Frame, out_dir: &Path) -> Result<FeatureVisualization> {
    let out = adasr_tensor::no_grad(|| {
        model.networks.forward(&model.weights.generator, &source.to_tensor(), &driving.to_tensor())
    })?;
    let mut files = Vec::new();
    let mut energy = Vec::new();
    let maps = [
        ("feature_layer_1_before_warp", &out.source_features.maps[0]),
        ("feature_layer_2_before_warp", &out.source_features.maps[1]),
        ("feature_layer_3_after_warp", &out.warped_features.maps[1]),
        ("feature_layer_4_after_warp", &out.warped_features.maps[2]),
    ];
    for (label, t) in maps {
        let (m, h, w) = channel_mean(t, 0);
        energy.push((label.to_string(), laplacian_energy(&m, h, w)));
        let path = out_dir.join(format!("{label}.png"));
        write_png(&gray_frame(&m, h, w)?, &path)?;
        files.push(path);
    }
    let (f, h, w) = (&out.flow, out.flow.dim(1), out.flow.dim(2));
    let grid = Tensor::<f32>::identity_grid(1, h, w);
    let disp: Vec<f32> = f.data().iter().zip(grid.data()).map(|(a, b)| a - b).collect();
    let scale = disp.iter().fold(1e-6f32, |m, v| m.max(v.abs()));
    let flow_img = Frame::from_fn(h, w, |c, y, x| match c {
        0 | 1 => 0.5 + 0.5 * disp[(y * w + x) * 2 + c] / scale,
        _ => 0.5,
    })?;
    let flow_path = out_dir.join("flow.png");
    write_png(&flow_img, &flow_path)?;
    files.push(flow_path);
    let occ = out.occlusion.data();
    let occ_img = Frame::from_fn(h, w, |_, y, x| occ[y * w + x])?;
    let occ_path = out_dir.join("occlusion.png");
    write_png(&occ_img, &occ_path)?;
    files.push(occ_path);
    Ok(FeatureVisualization { files, high_frequency_energy: energy })
}
