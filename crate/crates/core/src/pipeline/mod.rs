//! Inference on files: animation jobs and feature visualization.

mod animate;
mod visualize;

pub use animate::{animate, animate_frames, compose_relative, load_model, AnimationJob, ModelAnimator, TransferMode};
pub use visualize::{laplacian_energy, visualize_features, FeatureVisualization};
