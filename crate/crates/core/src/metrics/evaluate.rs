use serde::Serialize;

use super::fid::fid;
use super::image::{psnr, ssim};
use super::oracles::{aed, akd, EmbeddingOracle, KeypointOracle, PyramidEmbedding};
use crate::media_io::{Frame, FrameSequence};
use crate::{Error, Result};

/// One evaluation unit: animate `source` with `driving`, compare with
/// `reference` frame by frame.
#[derive(Clone, Debug)]
pub struct EvalItem {
    pub source: Frame,
    pub driving: FrameSequence,
    pub reference: FrameSequence,
}

/// Anything that turns a source and a driving clip into a clip.
pub trait Animator {
    fn animate(&self, source: &Frame, driving: &FrameSequence) -> Result<FrameSequence>;
}

/// Plug-in slots. A missing keypoint or identity oracle leaves the
/// corresponding metric absent.
pub struct Oracles {
    pub keypoints: Option<Box<dyn KeypointOracle>>,
    pub identity: Option<Box<dyn EmbeddingOracle>>,
    /// Features for the Frechet distance.
    pub distribution: Box<dyn EmbeddingOracle>,
}

impl Default for Oracles {
    fn default() -> Self {
        Self {
            keypoints: None,
            identity: Some(Box::new(PyramidEmbedding::new())),
            distribution: Box::new(PyramidEmbedding::new()),
        }
    }
}

/// Dataset-level metrics. PSNR is in dB and FID in raw Frechet units (no
/// 1e-2 rescaling); FID depends on the feature extractor used.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub akd: Option<f64>,
    pub psnr_db: f64,
    pub ssim: f64,
    pub fid: f64,
    pub aed: Option<f64>,
    pub sample_count: usize,
    pub fid_features: String,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Animates every item, then averages per-frame PSNR and SSIM, AKD and AED
/// per frame, and computes FID over all pooled frames.
pub fn evaluate(animator: &dyn Animator, items: &[EvalItem], oracles: &Oracles) -> Result<EvalReport> {
    if items.is_empty() {
        return Err(Error::config("evaluate.data", "no evaluation items"));
    }
    let (mut psnr_sum, mut ssim_sum, mut akd_sum, mut aed_sum) = (0.0, 0.0, 0.0, 0.0);
    let mut count = 0usize;
    let mut real_features = Vec::new();
    let mut fake_features = Vec::new();
    for item in items {
        let generated = animator.animate(&item.source, &item.driving)?;
        if generated.len() != item.reference.len() {
            return Err(Error::Shape(format!(
                "animator produced {} frames for a {}-frame reference",
                generated.len(),
                item.reference.len()
            )));
        }
        let n = generated.len() as f64;
        for (g, r) in generated.frames().iter().zip(item.reference.frames()) {
            psnr_sum += psnr(g, r)?;
            ssim_sum += ssim(g, r)?;
            real_features.push(oracles.distribution.embed(r)?);
            fake_features.push(oracles.distribution.embed(g)?);
        }
        if let Some(o) = &oracles.keypoints {
            akd_sum += akd(o.as_ref(), &generated, &item.reference)? * n;
        }
        if let Some(o) = &oracles.identity {
            aed_sum += aed(o.as_ref(), &generated, &item.reference)? * n;
        }
        count += generated.len();
    }
    let c = count as f64;
    Ok(EvalReport {
        akd: oracles.keypoints.as_ref().map(|_| akd_sum / c),
        psnr_db: psnr_sum / c,
        ssim: ssim_sum / c,
        fid: fid(&real_features, &fake_features)?,
        aed: oracles.identity.as_ref().map(|_| aed_sum / c),
        sample_count: count,
        fid_features: "fixed random feature pyramid, pooled deepest layer".into(),
    })
}
