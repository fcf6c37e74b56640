//! Frames, clips, dataset indexing and configuration files.

mod config;
mod dataset;
mod frame;
mod resample;
mod video;

pub use config::{load_config, Config, SUPPORTED_RESOLUTIONS};
pub use dataset::{
    sample_pair_indices, sample_training_pair, ClipEntry, DatasetIndex, LoadedDataset, PairIndices, MANIFEST_NAME,
};
pub use frame::{Frame, FrameSequence, DEFAULT_FPS, SIZE_MULTIPLE};
pub use resample::{resize_planar, ResizeKernel};
pub use video::{clip_len, list_frames, load_full_clip, load_image, load_video_clip, write_png, write_video, WriteMode};
