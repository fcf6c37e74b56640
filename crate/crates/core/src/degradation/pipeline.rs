use std::cell::Cell;

use rand::Rng;
use rand_distr::StandardNormal;

use super::compress::compress_round_trip;
use super::config::DegradationConfig;
use crate::media_io::{resize_planar, Frame, ResizeKernel};
use crate::seeds::rng_for;
use crate::{Error, Result};

/// Smallest side allowed after a downscale.
pub const MIN_DEGRADED_SIDE: usize = 8;

/// Random choices made for one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageDraw {
    pub downscale_factor: f64,
    pub down_kernel: ResizeKernel,
    pub up_kernel: ResizeKernel,
    pub noise_sigma: f64,
    pub quality: u32,
}

fn uniform(rng: &mut impl Rng, [lo, hi]: [f64; 2]) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Draws the parameters of every stage for `seed`. Draw order is fixed so
/// changing one range never shifts the others.
pub fn draw_stages(cfg: &DegradationConfig, seed: u64) -> Vec<StageDraw> {
    (0..cfg.stage_count)
        .map(|i| {
            let stage = cfg.stage(i);
            let mut rng = rng_for(seed, &[i as u64, 0]);
            let downscale_factor = uniform(&mut rng, stage.downscale_factor_range);
            let down_kernel = stage.resize_kernels[rng.gen_range(0..stage.resize_kernels.len())];
            let up_kernel = stage.resize_kernels[rng.gen_range(0..stage.resize_kernels.len())];
            let noise_sigma = uniform(&mut rng, stage.gaussian_noise_sigma_range);
            let [q0, q1] = stage.compression_quality_range;
            let quality = rng.gen_range(q0..=q1);
            StageDraw { downscale_factor, down_kernel, up_kernel, noise_sigma, quality }
        })
        .collect()
}

thread_local! {
    static CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`degrade`] calls made on the current thread. Lets callers
/// check that a code path never degrades its inputs.
pub fn degrade_calls_on_this_thread() -> u64 {
    CALLS.with(|c| c.get())
}

/// Applies the configured stages (downscale, Gaussian noise, compression,
/// upscale back) and a final resize. Deterministic in `(frame, cfg, seed)`.
pub fn degrade(frame: &Frame, cfg: &DegradationConfig, seed: u64) -> Result<Frame> {
    CALLS.with(|c| c.set(c.get() + 1));
    cfg.validate()?;
    let (h, w) = (frame.height(), frame.width());
    let mut data = frame.data().to_vec();
    for (i, draw) in draw_stages(cfg, seed).into_iter().enumerate() {
        let dh = (h as f64 / draw.downscale_factor).round() as usize;
        let dw = (w as f64 / draw.downscale_factor).round() as usize;
        if dh.min(dw) < MIN_DEGRADED_SIDE {
            return Err(Error::config(
                format!("degradation.stages[{i}].downscale_factor_range"),
                format!(
                    "{w}x{h} frame shrinks to {dw}x{dh}, below the {MIN_DEGRADED_SIDE}-pixel minimum"
                ),
            ));
        }
        let mut small = resize_planar(&data, 3, h, w, dh, dw, draw.down_kernel);
        if draw.noise_sigma > 0.0 {
            let mut noise_rng = rng_for(seed, &[i as u64, 1]);
            for v in small.iter_mut() {
                let z: f64 = noise_rng.sample(StandardNormal);
                *v = (*v as f64 + draw.noise_sigma * z).clamp(0.0, 1.0) as f32;
            }
        }
        compress_round_trip(&mut small, dh, dw, draw.quality);
        data = resize_planar(&small, 3, dh, dw, h, w, draw.up_kernel);
    }
    let out = Frame::new(h, w, data)?;
    match cfg.final_output_size {
        Some(size) if size != h || size != w => {
            let data = resize_planar(out.data(), 3, h, w, size, size, ResizeKernel::Bicubic);
            Frame::new(size, size, data)
        }
        _ => Ok(out),
    }
}
