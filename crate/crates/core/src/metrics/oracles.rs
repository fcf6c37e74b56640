use adasr_tensor::no_grad;

use crate::media_io::{Frame, FrameSequence};
use crate::networks::{FeatureExtractor, Model};
use crate::{Error, Result};

/// Frame to landmark positions in pixel units.
pub trait KeypointOracle: Send + Sync {
    fn landmarks(&self, frame: &Frame) -> Result<Vec<[f64; 2]>>;
}

/// Frame to a fixed-length descriptor.
pub trait EmbeddingOracle: Send + Sync {
    fn embed(&self, frame: &Frame) -> Result<Vec<f64>>;
}

/// Pooled deepest activations of the fixed feature pyramid.
#[derive(Clone, Default)]
pub struct PyramidEmbedding {
    extractor: FeatureExtractor<f32>,
}

impl PyramidEmbedding {
    pub fn new() -> Self {
        Self::default()
    }
}

impl EmbeddingOracle for PyramidEmbedding {
    fn embed(&self, frame: &Frame) -> Result<Vec<f64>> {
        Ok(no_grad(|| self.extractor.embed(&frame.to_tensor())).to_f64_vec())
    }
}

/// Keypoints of a trained detector, converted to pixel coordinates.
#[derive(Clone)]
pub struct DetectorKeypoints {
    model: Model,
}

impl DetectorKeypoints {
    pub fn new(model: Model) -> Self {
        Self { model }
    }
}

/// Normalized `[-1, 1]` coordinate to pixel index units on an `n`-wide axis.
pub fn to_pixels(v: f64, n: usize) -> f64 {
    (v + 1.0) * 0.5 * (n as f64 - 1.0)
}

impl KeypointOracle for DetectorKeypoints {
    fn landmarks(&self, frame: &Frame) -> Result<Vec<[f64; 2]>> {
        let set = self.model.detect_keypoints(frame)?;
        Ok(set
            .points
            .iter()
            .map(|p| [to_pixels(p.x, frame.width()), to_pixels(p.y, frame.height())])
            .collect())
    }
}

fn check_lengths(a: &FrameSequence, b: &FrameSequence) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("sequences have {} and {} frames", a.len(), b.len())));
    }
    Ok(())
}

/// Mean over frames and landmarks of the pixel distance between oracle
/// landmarks on generated and reference frames.
pub fn akd(oracle: &dyn KeypointOracle, generated: &FrameSequence, reference: &FrameSequence) -> Result<f64> {
    check_lengths(generated, reference)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (g, r) in generated.frames().iter().zip(reference.frames()) {
        let (lg, lr) = (oracle.landmarks(g)?, oracle.landmarks(r)?);
        if lg.len() != lr.len() {
            return Err(Error::Shape(format!("oracle returned {} and {} landmarks", lg.len(), lr.len())));
        }
        for (p, q) in lg.iter().zip(&lr) {
            total += ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        }
        count += lg.len();
    }
    if count == 0 {
        return Err(Error::Shape("no landmarks to compare".into()));
    }
    Ok(total / count as f64)
}

/// Mean over frames of the Euclidean distance between embeddings.
pub fn aed(oracle: &dyn EmbeddingOracle, generated: &FrameSequence, reference: &FrameSequence) -> Result<f64> {
    check_lengths(generated, reference)?;
    let mut total = 0.0;
    for (g, r) in generated.frames().iter().zip(reference.frames()) {
        let (eg, er) = (oracle.embed(g)?, oracle.embed(r)?);
        if eg.len() != er.len() {
            return Err(Error::Shape("embedding lengths differ".into()));
        }
        total += eg.iter().zip(&er).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    }
    Ok(total / generated.len() as f64)
}
