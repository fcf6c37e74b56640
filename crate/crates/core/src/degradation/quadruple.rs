use super::config::DegradationConfig;
use super::pipeline::degrade;
use crate::media_io::Frame;
use crate::{Error, Result};

/// Produces an enhanced target for supervision of high-quality sources.
pub trait Teacher: Send + Sync {
    fn enhance(&self, frame: &Frame) -> Result<Frame>;
}

/// Returns its input unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityTeacher;

impl Teacher for IdentityTeacher {
    fn enhance(&self, frame: &Frame) -> Result<Frame> {
        Ok(frame.clone())
    }
}

impl<F> Teacher for F
where
    F: Fn(&Frame) -> Result<Frame> + Send + Sync,
{
    fn enhance(&self, frame: &Frame) -> Result<Frame> {
        self(frame)
    }
}

/// One cross-quality training unit.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossQualityPair {
    pub source_lq: Frame,
    pub source_hq: Frame,
    pub driving: Frame,
    pub target_hq: Frame,
    pub target_sh: Option<Frame>,
    /// Seed that produced `source_lq` from `source_hq`.
    pub degradation_seed: u64,
}

/// Degrades the source and, when a teacher is given, enhances the target.
/// Driving and target frames are never degraded.
pub fn build_quadruple(
    source: &Frame,
    driving: &Frame,
    target: &Frame,
    cfg: &DegradationConfig,
    teacher: Option<&dyn Teacher>,
    seed: u64,
) -> Result<CrossQualityPair> {
    if !source.same_size(driving) || !source.same_size(target) {
        return Err(Error::Shape("source, driving and target must share one size".into()));
    }
    let source_lq = degrade(source, cfg, seed)?;
    if !source_lq.same_size(source) {
        return Err(Error::Shape(
            "degradation must keep the source size inside training quadruples".into(),
        ));
    }
    let target_sh = match teacher {
        Some(t) => {
            let out = t.enhance(target)?;
            if !out.same_size(target) {
                return Err(Error::Shape("teacher changed the frame size".into()));
            }
            Some(out)
        }
        None => None,
    };
    Ok(CrossQualityPair {
        source_lq,
        source_hq: source.clone(),
        driving: driving.clone(),
        target_hq: target.clone(),
        target_sh,
        degradation_seed: seed,
    })
}
