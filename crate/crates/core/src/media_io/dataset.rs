use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::frame::Frame;
use super::video::{clip_len, load_full_clip};
use crate::{Error, Result};

/// Manifest file name looked up in a dataset root.
pub const MANIFEST_NAME: &str = "manifest.tsv";

#[derive(Clone, Debug, PartialEq)]
pub struct ClipEntry {
    pub clip_id: String,
    /// Relative to the dataset root.
    pub path: PathBuf,
    pub frame_count: usize,
}

/// The clips of a dataset root.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub clips: Vec<ClipEntry>,
}

impl DatasetIndex {
    /// Reads `root/manifest.tsv` when present (`clip_id<TAB>path<TAB>frames`),
    /// otherwise indexes every subdirectory containing frame images.
    pub fn open(root: &Path) -> Result<Self> {
        let manifest = root.join(MANIFEST_NAME);
        let clips = if manifest.is_file() {
            parse_manifest(&manifest)?
        } else {
            scan_root(root)?
        };
        Self::from_entries(root, clips)
    }

    /// Validates entries: nonempty ids, at least two frames, paths present.
    pub fn from_entries(root: &Path, clips: Vec<ClipEntry>) -> Result<Self> {
        for c in &clips {
            if c.frame_count < 2 {
                return Err(Error::config(
                    format!("clip `{}`", c.clip_id),
                    format!("needs at least 2 frames, has {}", c.frame_count),
                ));
            }
            let full = root.join(&c.path);
            if !full.exists() {
                return Err(Error::config(
                    format!("clip `{}`", c.clip_id),
                    format!("path {} does not exist", full.display()),
                ));
            }
        }
        Ok(Self { root: root.to_path_buf(), clips })
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn clip_path(&self, i: usize) -> PathBuf {
        self.root.join(&self.clips[i].path)
    }
}

fn parse_manifest(path: &Path) -> Result<Vec<ClipEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut clips = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |msg: &str| Error::config(format!("{}:{}", MANIFEST_NAME, n + 1), msg.to_string());
        if fields.len() != 3 {
            return Err(bad("expected clip_id<TAB>relative_path<TAB>frame_count"));
        }
        let frame_count = fields[2].trim().parse().map_err(|_| bad("frame_count is not an integer"))?;
        clips.push(ClipEntry {
            clip_id: fields[0].to_string(),
            path: PathBuf::from(fields[1]),
            frame_count,
        });
    }
    Ok(clips)
}

fn scan_root(root: &Path) -> Result<Vec<ClipEntry>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut clips = Vec::new();
    for d in dirs {
        if let Ok(frame_count) = clip_len(&d) {
            let name = d.file_name().expect("directory entries have names").to_string_lossy().to_string();
            clips.push(ClipEntry { clip_id: name.clone(), path: PathBuf::from(name), frame_count });
        }
    }
    Ok(clips)
}

/// Frame indices chosen for one training pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairIndices {
    pub clip: usize,
    pub source: usize,
    pub driving: usize,
}

/// Picks a clip uniformly, a source frame uniformly, and a distinct driving
/// frame uniformly among those at most `max_gap` frames away (any frame when
/// `max_gap` is `None`).
pub fn sample_pair_indices(
    frame_counts: &[usize],
    max_gap: Option<usize>,
    rng: &mut impl Rng,
) -> Result<PairIndices> {
    if frame_counts.is_empty() {
        return Err(Error::config("dataset", "dataset index is empty"));
    }
    let clip = rng.gen_range(0..frame_counts.len());
    let n = frame_counts[clip];
    if n < 2 {
        return Err(Error::config("dataset", format!("clip {clip} has fewer than 2 frames")));
    }
    let source = rng.gen_range(0..n);
    let gap = max_gap.unwrap_or(n).max(1);
    let lo = source.saturating_sub(gap);
    let hi = (source + gap).min(n - 1);
    // draw from [lo, hi] minus the source frame
    let mut driving = rng.gen_range(lo..hi);
    if driving >= source {
        driving += 1;
    }
    Ok(PairIndices { clip, source, driving })
}

/// Draws a (source, driving, clip_id) triple from one clip.
pub fn sample_training_pair(
    index: &DatasetIndex,
    resolution: usize,
    rng: &mut impl Rng,
) -> Result<(Frame, Frame, String)> {
    let counts: Vec<usize> = index.clips.iter().map(|c| c.frame_count).collect();
    let p = sample_pair_indices(&counts, None, rng)?;
    let path = index.clip_path(p.clip);
    let seq = super::video::load_video_clip(&path, &[p.source, p.driving], resolution)?;
    let mut frames = seq.into_frames().into_iter();
    let source = frames.next().expect("two frames requested");
    let driving = frames.next().expect("two frames requested");
    Ok((source, driving, index.clips[p.clip].clip_id.clone()))
}

/// A dataset decoded into memory at a fixed resolution.
#[derive(Clone, Debug)]
pub struct LoadedDataset {
    pub clip_ids: Vec<String>,
    pub clips: Vec<Vec<Frame>>,
}

impl LoadedDataset {
    pub fn load(index: &DatasetIndex, resolution: usize) -> Result<Self> {
        if index.is_empty() {
            return Err(Error::config("training.dataset", "dataset index is empty"));
        }
        let mut clips = Vec::with_capacity(index.len());
        for (i, entry) in index.clips.iter().enumerate() {
            let seq = load_full_clip(&index.clip_path(i), resolution)?;
            let mut frames = seq.into_frames();
            frames.truncate(entry.frame_count);
            if frames.len() < 2 {
                return Err(Error::config(format!("clip `{}`", entry.clip_id), "fewer than 2 decodable frames"));
            }
            clips.push(frames);
        }
        Ok(Self { clip_ids: index.clips.iter().map(|c| c.clip_id.clone()).collect(), clips })
    }

    pub fn from_clips(clips: Vec<(String, Vec<Frame>)>) -> Result<Self> {
        if clips.is_empty() {
            return Err(Error::config("training.dataset", "dataset index is empty"));
        }
        if let Some((id, _)) = clips.iter().find(|(_, f)| f.len() < 2) {
            return Err(Error::config(format!("clip `{id}`"), "needs at least 2 frames"));
        }
        let (clip_ids, clips) = clips.into_iter().unzip();
        Ok(Self { clip_ids, clips })
    }

    pub fn frame_counts(&self) -> Vec<usize> {
        self.clips.iter().map(|c| c.len()).collect()
    }

    pub fn frame(&self, clip: usize, index: usize) -> &Frame {
        &self.clips[clip][index]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn pairs_stay_within_one_clip(seed in any::<u64>(), counts in prop::collection::vec(2usize..30, 1..8),
                                      gap in prop::option::of(1usize..5)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let p = sample_pair_indices(&counts, gap, &mut rng).unwrap();
                prop_assert!(p.clip < counts.len());
                prop_assert!(p.source < counts[p.clip] && p.driving < counts[p.clip]);
                prop_assert_ne!(p.source, p.driving);
                if let Some(g) = gap {
                    prop_assert!(p.source.abs_diff(p.driving) <= g);
                }
            }
        }

        #[test]
        fn sampling_is_a_function_of_the_seed(seed in any::<u64>()) {
            let counts = [5, 9, 2];
            let a = sample_pair_indices(&counts, None, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let b = sample_pair_indices(&counts, None, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn two_frame_clip_yields_both_frames() {
        let mut seen = std::collections::HashSet::new();
        for seed in 0..20 {
            let p = sample_pair_indices(&[2], None, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            seen.insert((p.source, p.driving));
        }
        assert!(seen.iter().all(|&(s, d)| s + d == 1));
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn empty_index_is_a_config_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(sample_pair_indices(&[], None, &mut rng), Err(Error::Config { .. })));
    }

    #[test]
    fn clip_distribution_is_uniform() {
        // chi-square goodness of fit against the uniform multinomial
        let counts = vec![8usize; 100];
        let draws = 10_000;
        let mut hist = vec![0usize; 100];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..draws {
            hist[sample_pair_indices(&counts, None, &mut rng).unwrap().clip] += 1;
        }
        let expected = draws as f64 / 100.0;
        let chi2: f64 = hist.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        // 99 degrees of freedom: mean 99, sd sqrt(198); 3 sd bound
        assert!(chi2 < 99.0 + 3.0 * 198f64.sqrt(), "chi2 {chi2}");
    }
}
