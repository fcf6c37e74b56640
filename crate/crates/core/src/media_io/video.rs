use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Rgb};
use serde::{Deserialize, Serialize};

use super::frame::{Frame, FrameSequence, DEFAULT_FPS};
use crate::{Error, Result};

const FRAME_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "tif", "tiff"];
const CLIP_METADATA: &str = "clip.json";

/// Encoding used by [`write_video`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WriteMode {
    /// 32-bit float TIFF frames; reloading yields bit-identical values.
    Lossless,
    /// JPEG frames at the given quality (1..=100).
    Lossy { quality: u8 },
}

impl Default for WriteMode {
    fn default() -> Self {
        WriteMode::Lossy { quality: 98 }
    }
}

#[derive(Serialize, Deserialize)]
struct ClipMetadata {
    fps: f64,
    frame_count: usize,
}

fn is_frame_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Frame files of a clip directory in name order. A single image file is a
/// one-frame clip.
pub fn list_frames(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        if is_frame_file(&p) {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::decode(path, "no frame images found"));
    }
    Ok(files)
}

/// Number of frames in a clip directory or image file.
pub fn clip_len(path: &Path) -> Result<usize> {
    list_frames(path).map(|f| f.len())
}

/// Decodes one image, center-crops it to a square and resizes it to
/// `resolution x resolution`.
pub fn load_image(path: &Path, resolution: usize) -> Result<Frame> {
    let img = image::open(path)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::decode(path, other),
        })?
        .into_rgb32f();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let side = w.min(h);
    let (x0, y0) = ((w - side) / 2, (h - side) / 2);
    let raw = img.into_raw();
    let mut hwc = Vec::with_capacity(side * side * 3);
    for y in y0..y0 + side {
        hwc.extend_from_slice(&raw[(y * w + x0) * 3..(y * w + x0 + side) * 3]);
    }
    if hwc.iter().any(|v| !v.is_finite()) {
        return Err(Error::decode(path, "non-finite pixel values"));
    }
    hwc.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    if side == resolution {
        return Frame::from_hwc(side, side, &hwc).map_err(|e| Error::decode(path, e));
    }
    let plane = side * side;
    let mut planar = vec![0.0; 3 * plane];
    for (i, px) in hwc.chunks_exact(3).enumerate() {
        for c in 0..3 {
            planar[c * plane + i] = px[c];
        }
    }
    let data = super::resample::resize_planar(
        &planar,
        3,
        side,
        side,
        resolution,
        resolution,
        if side > resolution { super::ResizeKernel::Area } else { super::ResizeKernel::Bicubic },
    );
    Frame::new(resolution, resolution, data)
}

/// Loads the frames at `indices` from a clip directory (or single image),
/// resized to `resolution`. Repeated indices decode once.
pub fn load_video_clip(path: &Path, indices: &[usize], resolution: usize) -> Result<FrameSequence> {
    let files = list_frames(path)?;
    if let Some(&index) = indices.iter().find(|&&i| i >= files.len()) {
        return Err(Error::Bounds { index, len: files.len() });
    }
    let mut cache: HashMap<usize, Frame> = HashMap::new();
    let mut frames = Vec::with_capacity(indices.len());
    for &i in indices {
        if !cache.contains_key(&i) {
            cache.insert(i, load_image(&files[i], resolution)?);
        }
        frames.push(cache[&i].clone());
    }
    FrameSequence::new(frames, read_fps(path))
}

/// Loads every frame of a clip.
pub fn load_full_clip(path: &Path, resolution: usize) -> Result<FrameSequence> {
    let n = clip_len(path)?;
    load_video_clip(path, &(0..n).collect::<Vec<_>>(), resolution)
}

fn read_fps(path: &Path) -> f64 {
    fs::read_to_string(path.join(CLIP_METADATA))
        .ok()
        .and_then(|s| serde_json::from_str::<ClipMetadata>(&s).ok())
        .map_or(DEFAULT_FPS, |m| m.fps)
}

/// Writes a clip directory of numbered frames plus a small metadata file.
pub fn write_video(seq: &FrameSequence, path: &Path, mode: WriteMode) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
    for old in list_frames(path).unwrap_or_default() {
        fs::remove_file(&old).map_err(|e| Error::io(&old, e))?;
    }
    for (i, frame) in seq.frames().iter().enumerate() {
        match mode {
            WriteMode::Lossless => {
                let file = path.join(format!("frame_{i:05}.tiff"));
                let buf: ImageBuffer<Rgb<f32>, Vec<f32>> =
                    ImageBuffer::from_raw(frame.width() as u32, frame.height() as u32, frame.to_hwc())
                        .expect("buffer size matches frame");
                buf.save(&file).map_err(|e| Error::io(&file, std::io::Error::other(e)))?;
            }
            WriteMode::Lossy { quality } => {
                let file = path.join(format!("frame_{i:05}.jpg"));
                let bytes = quantize_u8(frame);
                let mut enc = jpeg_encoder::Encoder::new_file(&file, quality.clamp(1, 100))
                    .map_err(|e| Error::io(&file, std::io::Error::other(e)))?;
                // full-resolution chroma; subsampling costs more than the quality setting on small frames
                enc.set_sampling_factor(jpeg_encoder::SamplingFactor::R_4_4_4);
                enc.encode(&bytes, frame.width() as u16, frame.height() as u16, jpeg_encoder::ColorType::Rgb)
                    .map_err(|e| Error::io(&file, std::io::Error::other(e)))?;
            }
        }
    }
    let meta = ClipMetadata { fps: seq.fps(), frame_count: seq.len() };
    let meta_path = path.join(CLIP_METADATA);
    fs::write(&meta_path, serde_json::to_string_pretty(&meta).expect("metadata serializes"))
        .map_err(|e| Error::io(&meta_path, e))
}

/// Writes a single frame as an 8-bit PNG.
pub fn write_png(frame: &Frame, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    image::save_buffer(
        path,
        &quantize_u8(frame),
        frame.width() as u32,
        frame.height() as u32,
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|e| Error::io(path, std::io::Error::other(e)))
}

fn quantize_u8(frame: &Frame) -> Vec<u8> {
    frame.to_hwc().iter().map(|v| (v * 255.0).round() as u8).collect()
}
