use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::batch::sample_batch;
use super::state::TrainState;
use super::step::train_step;
use crate::degradation::Teacher;
use crate::losses::LossReport;
use crate::media_io::{Config, DatasetIndex, LoadedDataset};
use crate::networks::Checkpoint;
use crate::{Error, Result};

pub const METRICS_LOG: &str = "metrics.csv";

/// Options of a training run beyond the config file.
#[derive(Default)]
pub struct RunOptions {
    pub resume: Option<PathBuf>,
    pub teacher: Option<Box<dyn Teacher>>,
    /// Single-threaded batch preparation.
    pub deterministic: bool,
}

/// Files written by [`run_training`].
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub final_step: u64,
    pub checkpoints: Vec<PathBuf>,
    pub log: PathBuf,
    pub last_report: Option<LossReport>,
}

pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("checkpoint_{step:06}.bin"))
}

/// Appends loss rows to a CSV file, writing the header for a new file.
pub struct MetricsLog {
    path: PathBuf,
    file: fs::File,
}

impl MetricsLog {
    pub fn open(path: &Path) -> Result<Self> {
        let fresh = !path.exists() || fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
        if fresh {
            writeln!(file, "{}", LossReport::csv_header()).map_err(|e| Error::io(path, e))?;
        }
        Ok(Self { path: path.to_path_buf(), file })
    }

    pub fn append(&mut self, step: u64, report: &LossReport) -> Result<()> {
        writeln!(self.file, "{}", report.csv_row(step)).map_err(|e| Error::io(&self.path, e))
    }
}

/// Trains `state` for `steps` more steps on in-memory data; `observe` sees
/// each step number (after the update) and its report.
pub fn train_on(
    state: &mut TrainState,
    data: &LoadedDataset,
    steps: u64,
    teacher: Option<&dyn Teacher>,
    workers: usize,
    mut observe: impl FnMut(&TrainState, &LossReport) -> Result<()>,
) -> Result<()> {
    for _ in 0..steps {
        let batch = sample_batch(data, &state.config, state.step, teacher, workers)?;
        let report = train_step(state, &batch)?;
        observe(state, &report)?;
    }
    Ok(())
}

/// Trains from the config's dataset up to `training.steps`, checkpointing
/// every `training.checkpoint_every` steps and at the end, and appending one
/// CSV row per step.
pub fn run_training(config: &Config, opts: RunOptions) -> Result<RunSummary> {
    config.validate()?;
    let root = config
        .training
        .dataset
        .as_ref()
        .ok_or_else(|| Error::config("training.dataset", "no dataset configured"))?;
    let index = DatasetIndex::open(root)?;
    if index.is_empty() {
        return Err(Error::config("training.dataset", format!("no clips found under {}", root.display())));
    }
    let data = LoadedDataset::load(&index, config.resolution)?;
    let mut state = match &opts.resume {
        Some(path) => {
            let ckpt = Checkpoint::load(path)?;
            if ckpt.config.resolution != config.resolution || ckpt.config.keypoint_count != config.keypoint_count {
                return Err(Error::config("resume", "checkpoint architecture differs from the config"));
            }
            let mut state = TrainState::from_checkpoint(ckpt)?;
            // the run's own settings (steps, output, dataset) take precedence
            state.config.training = config.training.clone();
            state
        }
        None => TrainState::new(config.clone())?,
    };
    let out_dir = config.training.output_dir.clone();
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let log_path = out_dir.join(METRICS_LOG);
    let mut log = MetricsLog::open(&log_path)?;
    let workers = if opts.deterministic { 1 } else { config.training.loader_workers };
    let remaining = config.training.steps.saturating_sub(state.step);
    let every = config.training.checkpoint_every;
    let mut checkpoints = Vec::new();
    let mut last_report = None;
    train_on(&mut state, &data, remaining, opts.teacher.as_deref(), workers, |s, report| {
        log.append(s.step, report)?;
        if s.step % every == 0 || s.step == config.training.steps {
            let path = checkpoint_path(&out_dir, s.step);
            s.to_checkpoint().save(&path)?;
            checkpoints.push(path);
        }
        last_report = Some(report.clone());
        Ok(())
    })?;
    Ok(RunSummary { final_step: state.step, checkpoints, log: log_path, last_report })
}
