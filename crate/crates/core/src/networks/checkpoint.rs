//! Single-file training archive: magic bytes, a JSON header, then raw
//! little-endian `f32` blobs referenced from the header.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use adasr_tensor::optim::AdamState;
use adasr_tensor::ParamStore;
use serde::{Deserialize, Serialize};

use super::weights::NetworkWeights;
use crate::media_io::Config;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ADASRCKP";
pub const CHECKPOINT_FORMAT: &str = "adasr-checkpoint-v1";

/// Everything needed to resume training or run inference.
#[derive(Clone)]
pub struct Checkpoint {
    pub config: Config,
    /// Completed training steps.
    pub step: u64,
    pub weights: NetworkWeights,
    pub generator_optimizer: AdamState<f32>,
    pub discriminator_optimizer: AdamState<f32>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    weights_version: String,
    config: String,
    step: u64,
    generator_optimizer_step: u64,
    discriminator_optimizer_step: u64,
    tensors: Vec<Entry>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    group: String,
    name: String,
    shape: Vec<usize>,
    offset: usize,
    len: usize,
}

const GROUP_G: &str = "generator";
const GROUP_D: &str = "discriminator";
const GROUP_G_M1: &str = "generator_optimizer.first";
const GROUP_G_M2: &str = "generator_optimizer.second";
const GROUP_D_M1: &str = "discriminator_optimizer.first";
const GROUP_D_M2: &str = "discriminator_optimizer.second";

struct Writer {
    entries: Vec<Entry>,
    blob: Vec<u8>,
}

impl Writer {
    fn push(&mut self, group: &str, name: &str, shape: &[usize], values: &[f32]) {
        self.entries.push(Entry {
            group: group.to_string(),
            name: name.to_string(),
            shape: shape.to_vec(),
            offset: self.blob.len() / 4,
            len: values.len(),
        });
        for v in values {
            self.blob.extend_from_slice(&v.to_le_bytes());
        }
    }

    fn store(&mut self, group: &str, store: &ParamStore<f32>) {
        for (name, t) in store.iter() {
            self.push(group, name, t.shape(), t.data());
        }
    }

    fn moments(&mut self, group: &str, m: &BTreeMap<String, Vec<f32>>) {
        for (name, v) in m {
            self.push(group, name, &[v.len()], v);
        }
    }
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = Writer { entries: Vec::new(), blob: Vec::new() };
        w.store(GROUP_G, &self.weights.generator);
        w.store(GROUP_D, &self.weights.discriminator);
        w.moments(GROUP_G_M1, &self.generator_optimizer.first);
        w.moments(GROUP_G_M2, &self.generator_optimizer.second);
        w.moments(GROUP_D_M1, &self.discriminator_optimizer.first);
        w.moments(GROUP_D_M2, &self.discriminator_optimizer.second);
        let header = Header {
            format: CHECKPOINT_FORMAT.to_string(),
            weights_version: self.weights.version.clone(),
            config: self.config.to_toml_string(),
            step: self.step,
            generator_optimizer_step: self.generator_optimizer.step,
            discriminator_optimizer_step: self.discriminator_optimizer.step,
            tensors: w.entries,
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::Validation(e.to_string()))?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        // write-then-rename so an interrupted save never leaves a torn file
        let tmp = path.with_extension("tmp");
        let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        file.write_all(CHECKPOINT_MAGIC)
            .and_then(|_| file.write_all(&(json.len() as u64).to_le_bytes()))
            .and_then(|_| file.write_all(&json))
            .and_then(|_| file.write_all(&w.blob))
            .and_then(|_| file.sync_all())
            .map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let bad = |msg: &str| Error::decode(path, msg);
        if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(bad("not a checkpoint archive"));
        }
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(16..16 + header_len).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(body).map_err(|e| bad(&e.to_string()))?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(Error::Version { found: header.format, expected: CHECKPOINT_FORMAT.to_string() });
        }
        if header.weights_version != super::weights::WEIGHTS_VERSION {
            return Err(Error::Version {
                found: header.weights_version,
                expected: super::weights::WEIGHTS_VERSION.to_string(),
            });
        }
        let config = Config::from_toml_str(&header.config)?;
        let blob = &bytes[16 + header_len..];
        let mut generator = ParamStore::new();
        let mut discriminator = ParamStore::new();
        let mut gen_opt = AdamState { step: header.generator_optimizer_step, ..AdamState::default() };
        let mut disc_opt = AdamState { step: header.discriminator_optimizer_step, ..AdamState::default() };
        for e in header.tensors {
            let start = e.offset * 4;
            let raw = blob.get(start..start + e.len * 4).ok_or_else(|| bad("tensor data out of range"))?;
            let values: Vec<f32> =
                raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
            if e.shape.iter().product::<usize>() != e.len {
                return Err(bad(&format!("tensor `{}` has inconsistent shape", e.name)));
            }
            match e.group.as_str() {
                GROUP_G => generator.insert(e.name, values, &e.shape),
                GROUP_D => discriminator.insert(e.name, values, &e.shape),
                GROUP_G_M1 => drop(gen_opt.first.insert(e.name, values)),
                GROUP_G_M2 => drop(gen_opt.second.insert(e.name, values)),
                GROUP_D_M1 => drop(disc_opt.first.insert(e.name, values)),
                GROUP_D_M2 => drop(disc_opt.second.insert(e.name, values)),
                other => return Err(bad(&format!("unknown tensor group `{other}`"))),
            }
        }
        Ok(Self {
            config,
            step: header.step,
            weights: NetworkWeights { version: header.weights_version, generator, discriminator },
            generator_optimizer: gen_opt,
            discriminator_optimizer: disc_opt,
        })
    }
}
