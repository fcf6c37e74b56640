//! 8x8 block-transform quantization in YCbCr, a codec-free stand-in for
//! lossy image compression.

const LUMA_TABLE: [f64; 64] = [
    16., 11., 10., 16., 24., 40., 51., 61., 12., 12., 14., 19., 26., 58., 60., 55., 14., 13., 16., 24., 40., 57.,
    69., 56., 14., 17., 22., 29., 51., 87., 80., 62., 18., 22., 37., 56., 68., 109., 103., 77., 24., 35., 55., 64.,
    81., 104., 113., 92., 49., 64., 78., 87., 103., 121., 120., 101., 72., 92., 95., 98., 112., 100., 103., 99.,
];

const CHROMA_TABLE: [f64; 64] = [
    17., 18., 24., 47., 99., 99., 99., 99., 18., 21., 26., 66., 99., 99., 99., 99., 24., 26., 56., 99., 99., 99.,
    99., 99., 47., 66., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99.,
    99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99.,
];

/// Quantization step multiplier for a quality in `[10, 100)`; linear, 1 at 50.
pub fn quality_scale(quality: u32) -> f64 {
    (100.0 - quality as f64) / 50.0
}

fn dct_basis() -> [[f64; 8]; 8] {
    let mut c = [[0.0; 8]; 8];
    for (u, row) in c.iter_mut().enumerate() {
        let a = if u == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
        for (x, v) in row.iter_mut().enumerate() {
            *v = a * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos();
        }
    }
    c
}

fn quantize_plane(plane: &mut [f64], h: usize, w: usize, table: &[f64; 64], scale: f64, basis: &[[f64; 8]; 8]) {
    let mut block = [[0.0f64; 8]; 8];
    let mut tmp = [[0.0f64; 8]; 8];
    for by in (0..h).step_by(8) {
        for bx in (0..w).step_by(8) {
            // edge replication for partial blocks
            for (y, row) in block.iter_mut().enumerate() {
                for (x, v) in row.iter_mut().enumerate() {
                    *v = plane[(by + y).min(h - 1) * w + (bx + x).min(w - 1)] - 128.0;
                }
            }
            // forward transform: C * B * C^T
            for u in 0..8 {
                for x in 0..8 {
                    tmp[u][x] = (0..8).map(|y| basis[u][y] * block[y][x]).sum();
                }
            }
            for u in 0..8 {
                for v in 0..8 {
                    let coef: f64 = (0..8).map(|x| tmp[u][x] * basis[v][x]).sum();
                    let step = (table[u * 8 + v] * scale).max(1e-6);
                    block[u][v] = (coef / step).round() * step;
                }
            }
            // inverse transform: C^T * F * C
            for y in 0..8 {
                for v in 0..8 {
                    tmp[y][v] = (0..8).map(|u| basis[u][y] * block[u][v]).sum();
                }
            }
            for y in 0..8.min(h - by) {
                for x in 0..8.min(w - bx) {
                    let value: f64 = (0..8).map(|v| tmp[y][v] * basis[v][x]).sum();
                    plane[(by + y) * w + bx + x] = value + 128.0;
                }
            }
        }
    }
}

/// Compression round trip of planar RGB data in `[0, 1]`.
pub fn compress_round_trip(data: &mut [f32], h: usize, w: usize, quality: u32) {
    if quality >= 100 {
        return;
    }
    let scale = quality_scale(quality);
    let n = h * w;
    let mut planes = vec![vec![0.0f64; n]; 3];
    for i in 0..n {
        let (r, g, b) = (data[i] as f64 * 255.0, data[n + i] as f64 * 255.0, data[2 * n + i] as f64 * 255.0);
        planes[0][i] = 0.299 * r + 0.587 * g + 0.114 * b;
        planes[1][i] = 128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b;
        planes[2][i] = 128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b;
    }
    let basis = dct_basis();
    for (c, plane) in planes.iter_mut().enumerate() {
        let table = if c == 0 { &LUMA_TABLE } else { &CHROMA_TABLE };
        quantize_plane(plane, h, w, table, scale, &basis);
    }
    for i in 0..n {
        let (y, cb, cr) = (planes[0][i], planes[1][i] - 128.0, planes[2][i] - 128.0);
        let rgb = [y + 1.402 * cr, y - 0.344_136 * cb - 0.714_136 * cr, y + 1.772 * cb];
        for (c, v) in rgb.iter().enumerate() {
            data[c * n + i] = (v / 255.0).clamp(0.0, 1.0) as f32;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texture(h: usize, w: usize) -> Vec<f32> {
        (0..3 * h * w)
            .map(|i| {
                let (c, p) = (i / (h * w), i % (h * w));
                let (y, x) = ((p / w) as f32, (p % w) as f32);
                (0.5 + 0.3 * (x * 0.7 + c as f32).sin() * (y * 0.4).cos()).clamp(0.0, 1.0)
            })
            .collect()
    }

    fn mse(a: &[f32], b: &[f32]) -> f64 {
        a.iter().zip(b).map(|(x, y)| ((x - y) as f64).powi(2)).sum::<f64>() / a.len() as f64
    }

    #[test]
    fn transform_is_orthonormal() {
        let c = dct_basis();
        for i in 0..8 {
            for j in 0..8 {
                let dot: f64 = (0..8).map(|k| c[i][k] * c[j][k]).sum();
                assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn near_lossless_quality_is_close_and_low_quality_is_worse() {
        let orig = texture(20, 28);
        let mut fine = orig.clone();
        compress_round_trip(&mut fine, 20, 28, 99);
        let mut coarse = orig.clone();
        compress_round_trip(&mut coarse, 20, 28, 10);
        assert!(mse(&orig, &fine) < 1e-5, "{}", mse(&orig, &fine));
        assert!(mse(&orig, &coarse) > mse(&orig, &fine));
        let mut untouched = orig.clone();
        compress_round_trip(&mut untouched, 20, 28, 100);
        assert_eq!(untouched, orig);
    }
}
