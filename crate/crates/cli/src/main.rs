use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adasr_core::degradation::{degrade, DegradationConfig};
use adasr_core::media_io::{load_config, load_full_clip, load_image, write_png, DatasetIndex, WriteMode, SIZE_MULTIPLE};
use adasr_core::metrics::{evaluate, DetectorKeypoints, EvalItem, Oracles};
use adasr_core::pipeline::{animate, load_model, visualize_features, AnimationJob, ModelAnimator, TransferMode};
use adasr_core::training::{run_training, RunOptions};
use adasr_core::{Error, Result};
use clap::{Args, Parser, Subcommand};

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

/// One-shot talking-head animation with degradation-robust training.
#[derive(Parser)]
#[command(name = "adasr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train from a config file, writing checkpoints and a metrics log.
    Train(TrainArgs),
    /// Animate a source portrait with the motion of a driving clip.
    Animate(AnimateArgs),
    /// Score a checkpoint on a dataset by self-reenactment.
    Evaluate(EvaluateArgs),
    /// Apply the training degradation to one image.
    Degrade(DegradeArgs),
    /// Dump feature maps before and after warping, plus flow and occlusion.
    VisualizeFeatures(VisualizeArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// Continue from this checkpoint.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Single-threaded data loading for bit-reproducible runs
    /// (also enabled by ADASR_DETERMINISTIC=1).
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct AnimateArgs {
    #[arg(long)]
    source: PathBuf,
    /// Clip directory of frames (or a single image).
    #[arg(long)]
    driving: PathBuf,
    #[arg(long)]
    ckpt: PathBuf,
    /// Output clip directory.
    #[arg(long)]
    out: PathBuf,
    /// `absolute` or `relative`; defaults to absolute with --same-identity,
    /// relative otherwise.
    #[arg(long)]
    mode: Option<TransferMode>,
    /// Source and driving show the same person.
    #[arg(long)]
    same_identity: bool,
    /// Driving frame that relative motion is measured from.
    #[arg(long, default_value_t = 0)]
    anchor_frame: usize,
    #[arg(long)]
    fps: Option<f64>,
    /// Write float TIFF frames instead of JPEG.
    #[arg(long)]
    lossless: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Dataset root: clip directories or a manifest.
    #[arg(long)]
    data: PathBuf,
    /// JSON report path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "absolute")]
    mode: TransferMode,
}

#[derive(Args)]
struct DegradeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Output PNG path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Config file whose degradation section is used; defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Working side length; defaults to the input's shorter side rounded
    /// down to a multiple of 16.
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args)]
struct VisualizeArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    source: PathBuf,
    /// Driving image or clip directory.
    #[arg(long)]
    driving: PathBuf,
    /// Frame of the driving clip to use.
    #[arg(long, default_value_t = 0)]
    frame: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

fn deterministic_env() -> bool {
    std::env::var("ADASR_DETERMINISTIC").is_ok_and(|v| v == "1")
}

fn train(a: TrainArgs) -> Result<()> {
    let config = load_config(&a.config)?;
    let opts = RunOptions { resume: a.resume, teacher: None, deterministic: a.deterministic || deterministic_env() };
    let summary = run_training(&config, opts)?;
    println!("trained to step {}", summary.final_step);
    for c in &summary.checkpoints {
        println!("checkpoint {}", c.display());
    }
    println!("log {}", summary.log.display());
    Ok(())
}

fn animate_cmd(a: AnimateArgs) -> Result<()> {
    let mode = a.mode.unwrap_or(if a.same_identity { TransferMode::Absolute } else { TransferMode::Relative });
    let job = AnimationJob {
        source_image: a.source,
        driving_video: a.driving,
        checkpoint: a.ckpt,
        mode,
        output: a.out,
        fps: a.fps,
        anchor_frame: a.anchor_frame,
        write_mode: if a.lossless { WriteMode::Lossless } else { WriteMode::default() },
    };
    let seq = animate(&job)?;
    println!("wrote {} frames to {}", seq.len(), job.output.display());
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let model = load_model(&a.ckpt)?;
    let r = model.networks.resolution();
    let index = DatasetIndex::open(&a.data)?;
    if index.is_empty() {
        return Err(Error::config("data", format!("no clips under {}", a.data.display())));
    }
    let mut items = Vec::with_capacity(index.len());
    for i in 0..index.len() {
        let clip = load_full_clip(&index.clip_path(i), r)?;
        items.push(EvalItem { source: clip.frames()[0].clone(), driving: clip.clone(), reference: clip });
    }
    let oracles = Oracles { keypoints: Some(Box::new(DetectorKeypoints::new(model.clone()))), ..Oracles::default() };
    let animator = ModelAnimator { model, mode: a.mode, anchor_frame: 0 };
    let report = evaluate(&animator, &items, &oracles)?;
    std::fs::write(&a.out, report.to_json()).map_err(|e| Error::io(&a.out, e))?;
    println!("{}", report.to_json());
    Ok(())
}

fn default_side(path: &Path) -> Result<usize> {
    let (w, h) = image::image_dimensions(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::decode(path, other),
    })?;
    let side = (w.min(h) as usize / SIZE_MULTIPLE) * SIZE_MULTIPLE;
    if side == 0 {
        return Err(Error::decode(path, format!("image {w}x{h} is smaller than {SIZE_MULTIPLE} pixels")));
    }
    Ok(side)
}

fn degrade_cmd(a: DegradeArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => load_config(p)?.degradation,
        None => DegradationConfig::default(),
    };
    let side = match a.resolution {
        Some(r) => r,
        None => default_side(&a.input)?,
    };
    let frame = load_image(&a.input, side)?;
    let out = degrade(&frame, &cfg, a.seed)?;
    write_png(&out, &a.out)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn visualize_cmd(a: VisualizeArgs) -> Result<()> {
    let model = load_model(&a.ckpt)?;
    let r = model.networks.resolution();
    let source = load_image(&a.source, r)?;
    let clip = load_full_clip(&a.driving, r)?;
    let driving = clip.frames().get(a.frame).ok_or(Error::Bounds { index: a.frame, len: clip.len() })?;
    let vis = visualize_features(&model, &source, driving, &a.out_dir)?;
    for f in &vis.files {
        println!("wrote {}", f.display());
    }
    for (label, e) in &vis.high_frequency_energy {
        println!("mean |laplacian| {label}: {e:.6}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Animate(a) => animate_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Degrade(a) => degrade_cmd(a),
        Command::VisualizeFeatures(a) => visualize_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
