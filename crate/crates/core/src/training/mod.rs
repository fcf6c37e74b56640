//! Cross-quality training: degraded sources against pristine targets,
//! alternating discriminator and generator updates, checkpoints and logs.

mod batch;
mod config;
mod run;
mod state;
mod step;

pub use batch::{batch_seed, sample_batch, Batch};
pub use config::{OptimizerConfig, TrainingConfig};
pub use run::{checkpoint_path, run_training, train_on, MetricsLog, RunOptions, RunSummary, METRICS_LOG};
pub use state::{PoseOracle, TrainState};
pub use step::{forward_batch, forward_pipeline, pairings, train_step, Pairings};
