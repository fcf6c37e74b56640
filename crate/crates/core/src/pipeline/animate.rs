use std::path::{Path, PathBuf};
use std::str::FromStr;

use adasr_tensor::no_grad;
use serde::{Deserialize, Serialize};

use crate::media_io::{load_full_clip, load_image, write_video, Frame, FrameSequence, WriteMode, DEFAULT_FPS};
use crate::metrics::Animator;
use crate::motion_field::{mat3_mul, mat3_transpose, MotionParams, MotionTensors};
use crate::networks::{Checkpoint, Model};
use crate::{Error, Result};

/// How driving motion reaches the source.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferMode {
    /// Driving pose and expression are used as estimated.
    Absolute,
    /// Driving motion relative to an anchor frame is applied on top of the
    /// source's own pose and expression.
    #[default]
    Relative,
}

impl FromStr for TransferMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" => Ok(Self::Absolute),
            "relative" => Ok(Self::Relative),
            other => Err(Error::config("mode", format!("expected `absolute` or `relative`, got `{other}`"))),
        }
    }
}

/// One inference run from files to files.
#[derive(Clone, Debug)]
pub struct AnimationJob {
    pub source_image: PathBuf,
    pub driving_video: PathBuf,
    pub checkpoint: PathBuf,
    pub mode: TransferMode,
    pub output: PathBuf,
    /// Output frame rate; defaults to the driving clip's.
    pub fps: Option<f64>,
    /// Driving frame that relative motion is measured from.
    pub anchor_frame: usize,
    pub write_mode: WriteMode,
}

/// `source o anchor^-1 o frame`: rotation `R_f R_a^T R_s`, translation and
/// expression deltas shifted by the frame-minus-anchor difference. When the
/// anchor equals the source this is the frame's own motion.
pub fn compose_relative(source: &MotionParams, anchor: &MotionParams, frame: &MotionParams) -> Result<MotionParams> {
    let k = source.deltas.len();
    if anchor.deltas.len() != k || frame.deltas.len() != k {
        return Err(Error::Shape("motion parameters disagree on the keypoint count".into()));
    }
    let rotation = mat3_mul(&mat3_mul(&frame.rotation, &mat3_transpose(&anchor.rotation)), &source.rotation);
    let translation = [0, 1, 2].map(|i| source.translation[i] + frame.translation[i] - anchor.translation[i]);
    let deltas = (0..k)
        .map(|j| [0, 1, 2].map(|i| source.deltas[j][i] + frame.deltas[j][i] - anchor.deltas[j][i]))
        .collect();
    // skip re-validation: products of rotations stay orthonormal to rounding
    Ok(MotionParams { rotation, translation, deltas })
}

/// Animates `source` with every frame of `driving`. The source is used as
/// given; nothing here degrades it.
pub fn animate_frames(
    model: &Model,
    source: &Frame,
    driving: &[Frame],
    mode: TransferMode,
    anchor_frame: usize,
) -> Result<Vec<Frame>> {
    if driving.is_empty() {
        return Err(Error::Validation("driving clip has no frames".into()));
    }
    if anchor_frame >= driving.len() {
        return Err(Error::Bounds { index: anchor_frame, len: driving.len() });
    }
    let r = model.networks.resolution();
    if source.height() != r || source.width() != r {
        return Err(Error::Shape(format!("source must be {r}x{r}, got {}x{}", source.height(), source.width())));
    }
    let source_t = source.to_tensor();
    let source_mp = model.estimate_motion_params(source)?;
    let anchor_mp = model.estimate_motion_params(&driving[anchor_frame])?;
    driving
        .iter()
        .map(|d| {
            let frame_mp = model.estimate_motion_params(d)?;
            let mp = match mode {
                TransferMode::Absolute => frame_mp,
                TransferMode::Relative => compose_relative(&source_mp, &anchor_mp, &frame_mp)?,
            };
            let motion = MotionTensors::<f32>::from_params(&[mp])?;
            let out = no_grad(|| model.networks.forward_with_motion(&model.weights.generator, &source_t, motion))?;
            Frame::from_tensor(&out.output, 0)
        })
        .collect()
}

/// A model plus transfer settings, usable by the evaluator.
pub struct ModelAnimator {
    pub model: Model,
    pub mode: TransferMode,
    pub anchor_frame: usize,
}

impl Animator for ModelAnimator {
    fn animate(&self, source: &Frame, driving: &FrameSequence) -> Result<FrameSequence> {
        let frames = animate_frames(&self.model, source, driving.frames(), self.mode, self.anchor_frame)?;
        FrameSequence::new(frames, driving.fps())
    }
}

pub fn load_model(checkpoint: &Path) -> Result<Model> {
    Model::from_checkpoint(&Checkpoint::load(checkpoint)?)
}

/// Loads the job's inputs, animates, and writes the output clip.
pub fn animate(job: &AnimationJob) -> Result<FrameSequence> {
    let model = load_model(&job.checkpoint)?;
    let r = model.networks.resolution();
    let source = load_image(&job.source_image, r)?;
    let driving = load_full_clip(&job.driving_video, r)?;
    let frames = animate_frames(&model, &source, driving.frames(), job.mode, job.anchor_frame)?;
    let fps = job.fps.unwrap_or(if driving.fps() > 0.0 { driving.fps() } else { DEFAULT_FPS });
    let seq = FrameSequence::new(frames, fps)?;
    write_video(&seq, &job.output, job.write_mode)?;
    Ok(seq)
}
