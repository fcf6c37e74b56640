//! One-shot talking-head generation with adaptive super-resolution training.
//!
//! A single source portrait is animated by the motion of a driving clip.
//! Keypoints detected on both images are related through a canonical space
//! (rotation, translation, expression deltas), turned into a dense backward
//! flow with an occlusion mask, and used to warp multi-scale appearance
//! features that a spatially modulated generator decodes. Training feeds
//! degraded sources against pristine targets so the appearance encoder learns
//! to restore high-frequency detail.

pub mod degradation;
pub mod error;
pub mod losses;
pub mod media_io;
pub mod metrics;
pub mod motion_field;
pub mod networks;
pub mod pipeline;
pub mod seeds;
pub mod training;

pub use error::{Error, Result};
pub use media_io::{Config, Frame, FrameSequence};
