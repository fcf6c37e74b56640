//! Synthetic low-quality source construction and cross-quality pairs.

mod compress;
mod config;
mod pipeline;
mod quadruple;

pub use compress::{compress_round_trip, quality_scale};
pub use config::{DegradationConfig, StageConfig};
pub use pipeline::{degrade, degrade_calls_on_this_thread, draw_stages, StageDraw, MIN_DEGRADED_SIDE};
pub use quadruple::{build_quadruple, CrossQualityPair, IdentityTeacher, Teacher};
