//! Image-quality, motion and identity metrics and the dataset-level
//! evaluation report.

mod evaluate;
mod fid;
mod image;
mod oracles;

pub use evaluate::{evaluate, Animator, EvalItem, EvalReport, Oracles};
pub use fid::fid;
pub use image::{mse, psnr, psnr_from_mse, ssim, ssim_gray, PSNR_CAP_DB, SSIM_SIGMA, SSIM_WINDOW};
pub use oracles::{aed, akd, to_pixels, DetectorKeypoints, EmbeddingOracle, KeypointOracle, PyramidEmbedding};
