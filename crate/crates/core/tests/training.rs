use std::path::Path;

use adasr_core::media_io::{write_video, LoadedDataset, WriteMode};
use adasr_core::networks::Checkpoint;
use adasr_core::training::{
    batch_seed, pairings, run_training, sample_batch, train_on, train_step, RunOptions, TrainState, METRICS_LOG,
};
use adasr_core::{Config, Error, Frame, FrameSequence};

/// A bright disc drifting across a gradient background.
fn toy_frame(t: usize) -> Frame {
    let (cx, cy) = (20.0 + 4.0 * t as f32, 30.0 + 2.0 * t as f32);
    Frame::from_fn(64, 64, |c, y, x| {
        let d2 = (x as f32 - cx).powi(2) + (y as f32 - cy).powi(2);
        let bg = 0.2 + 0.4 * (x + y) as f32 / 126.0;
        if d2 < 100.0 {
            [0.9, 0.7, 0.5][c]
        } else {
            bg * [1.0, 0.9, 0.8][c]
        }
    })
    .unwrap()
}

fn toy_clip(n: usize) -> Vec<Frame> {
    (0..n).map(toy_frame).collect()
}

fn small_config() -> Config {
    let mut cfg = Config::new(64);
    cfg.keypoint_count = 4;
    cfg.seed = 17;
    cfg.training.batch_size = 2;
    cfg
}

fn toy_data() -> LoadedDataset {
    LoadedDataset::from_clips(vec![("toy".into(), toy_clip(4))]).unwrap()
}

fn write_dataset(root: &Path) {
    let seq = FrameSequence::new(toy_clip(4), 25.0).unwrap();
    write_video(&seq, &root.join("clip_a"), WriteMode::Lossless).unwrap();
}

fn run_steps(cfg: &Config, steps: u64) -> (TrainState, Vec<String>) {
    let mut state = TrainState::new(cfg.clone()).unwrap();
    let mut rows = Vec::new();
    train_on(&mut state, &toy_data(), steps, None, 1, |s, r| {
        let totals = format!("{:?}|{:?}", r.total.to_bits(), r.discriminator.map(f64::to_bits));
        rows.push(format!("{}|{totals}", r.csv_row(s.step)));
        Ok(())
    })
    .unwrap();
    (state, rows)
}

#[test]
fn ten_step_trajectory_is_bit_identical() {
    let cfg = small_config();
    let (a, ra) = run_steps(&cfg, 10);
    let (b, rb) = run_steps(&cfg, 10);
    assert_eq!(ra.len(), 10);
    assert_eq!(ra, rb);
    assert_eq!(a.step, 10);
    for ((na, ta), (nb, tb)) in a.weights.generator.iter().zip(b.weights.generator.iter()) {
        assert_eq!(na, nb);
        assert_eq!(ta.data(), tb.data(), "{na}");
    }
}

#[test]
fn zero_learning_rate_keeps_weights() {
    let mut cfg = small_config();
    cfg.optimizer.learning_rate = 0.0;
    let before = TrainState::new(cfg.clone()).unwrap();
    let (after, _) = run_steps(&cfg, 2);
    for (store_a, store_b) in [
        (&before.weights.generator, &after.weights.generator),
        (&before.weights.discriminator, &after.weights.discriminator),
    ] {
        for ((name, x), (_, y)) in store_a.iter().zip(store_b.iter()) {
            let diff = x.data().iter().zip(y.data()).map(|(p, q)| (p - q).abs() as f64).fold(0.0, f64::max);
            assert!(diff <= 1e-12, "{name} moved by {diff}");
        }
    }
    assert_eq!(after.step, 2);
}

#[test]
fn batches_degrade_only_the_source() {
    let cfg = small_config();
    let data = toy_data();
    let frames = toy_clip(4);
    let batch = sample_batch(&data, &cfg, 3, None, 1).unwrap();
    assert_eq!(batch.seed, batch_seed(&cfg, 3));
    assert_eq!(batch.len(), 2);
    for pair in &batch.pairs {
        assert!(frames.iter().any(|f| f == &pair.source_hq));
        assert!(frames.iter().any(|f| f == &pair.driving));
        assert_eq!(pair.target_hq, pair.driving);
        assert!(pair.target_sh.is_none());
        assert_ne!(pair.source_lq, pair.source_hq);
    }
    let threaded = sample_batch(&data, &cfg, 3, None, 2).unwrap();
    assert_eq!(threaded, batch);
    // the discriminator never sees a degraded image
    let p = pairings(&batch, 1.0);
    assert_eq!(p.sources.len(), 4);
    for r in &p.reals {
        assert!(frames.iter().any(|f| f == *r));
    }
}

#[test]
fn non_finite_weights_abort_with_the_batch_seed() {
    let cfg = small_config();
    let mut state = TrainState::new(cfg.clone()).unwrap();
    let name = state.weights.generator.names().find(|n| n.ends_with(".weight")).unwrap().to_string();
    let n = state.weights.generator.get(&name).numel();
    state.weights.generator.set_values(&name, vec![f32::NAN; n]);
    let batch = sample_batch(&toy_data(), &cfg, 0, None, 1).unwrap();
    match train_step(&mut state, &batch) {
        Err(Error::Numeric(msg)) => assert!(msg.contains(&format!("batch seed {}", batch.seed)), "{msg}"),
        other => panic!("expected a numeric error, got {other:?}"),
    }
    assert_eq!(state.step, 0);
}

#[test]
fn empty_or_missing_dataset_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.training.output_dir = dir.path().join("out");
    assert!(matches!(run_training(&cfg, RunOptions::default()), Err(Error::Config { .. })));
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    cfg.training.dataset = Some(empty);
    assert!(matches!(run_training(&cfg, RunOptions::default()), Err(Error::Config { .. })));
    assert!(matches!(LoadedDataset::from_clips(vec![]), Err(Error::Config { .. })));
}

#[test]
fn resume_matches_an_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let data_root = dir.path().join("data");
    write_dataset(&data_root);
    let mut cfg = small_config();
    cfg.training.dataset = Some(data_root);
    cfg.training.checkpoint_every = 2;
    let opts = || RunOptions { deterministic: true, ..Default::default() };

    cfg.training.steps = 3;
    cfg.training.output_dir = dir.path().join("fresh");
    let fresh = run_training(&cfg, opts()).unwrap();
    assert_eq!(fresh.final_step, 3);
    assert_eq!(fresh.checkpoints.len(), 2);
    let log = std::fs::read_to_string(dir.path().join("fresh").join(METRICS_LOG)).unwrap();
    assert_eq!(log.lines().count(), 1 + 3);

    cfg.training.steps = 2;
    cfg.training.output_dir = dir.path().join("first");
    let first = run_training(&cfg, opts()).unwrap();
    cfg.training.steps = 3;
    cfg.training.output_dir = dir.path().join("second");
    let resumed =
        run_training(&cfg, RunOptions { resume: Some(first.checkpoints[0].clone()), ..opts() }).unwrap();
    assert_eq!(resumed.final_step, 3);
    assert_eq!(resumed.last_report, fresh.last_report);

    let a = Checkpoint::load(fresh.checkpoints.last().unwrap()).unwrap();
    let b = Checkpoint::load(resumed.checkpoints.last().unwrap()).unwrap();
    assert_eq!(a.step, 3);
    for ((n, x), (_, y)) in a.weights.generator.iter().zip(b.weights.generator.iter()) {
        assert_eq!(x.data(), y.data(), "{n}");
    }
    assert_eq!(a.generator_optimizer, b.generator_optimizer);
}

#[test]
fn forward_pipeline_round_trips_through_a_checkpoint() {
    let cfg = small_config();
    let (state, _) = run_steps(&cfg, 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.bin");
    state.to_checkpoint().save(&path).unwrap();
    let back = TrainState::from_checkpoint(Checkpoint::load(&path).unwrap()).unwrap();
    let (src, drv) = (toy_frame(0), toy_frame(2));
    let (a, _) = adasr_core::training::forward_pipeline(&state, &src, &drv).unwrap();
    let (b, _) = adasr_core::training::forward_pipeline(&back, &src, &drv).unwrap();
    let diff = a.data().iter().zip(b.data()).map(|(p, q)| (p - q).abs()).fold(0.0f32, f32::max);
    assert!(diff <= 1e-6);
    assert_eq!(a.height(), 64);
}
