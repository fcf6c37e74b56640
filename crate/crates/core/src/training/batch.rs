use crate::degradation::{build_quadruple, CrossQualityPair, Teacher};
use crate::media_io::{sample_pair_indices, Config, LoadedDataset};
use crate::seeds::{derive_seed, rng_for};
use crate::{Error, Result};

/// Training pairs for one step plus the seed every random choice of the
/// step derives from.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub pairs: Vec<CrossQualityPair>,
    pub seed: u64,
}

impl Batch {
    pub fn new(pairs: Vec<CrossQualityPair>, seed: u64) -> Result<Self> {
        let first = pairs.first().ok_or_else(|| Error::Validation("a batch needs at least one pair".into()))?;
        let size = (first.source_hq.height(), first.source_hq.width());
        if pairs.iter().any(|p| (p.source_hq.height(), p.source_hq.width()) != size) {
            return Err(Error::Shape("all pairs in a batch must share one frame size".into()));
        }
        Ok(Self { pairs, seed })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Seed of the batch used at `step`.
pub fn batch_seed(config: &Config, step: u64) -> u64 {
    derive_seed(config.seed, &[step])
}

/// Samples `config.training.batch_size` pairs for `step`. Only the source
/// is degraded; driving frames and targets stay pristine. With `workers > 1`
/// pairs are built on several threads; the result does not depend on it.
pub fn sample_batch(
    data: &LoadedDataset,
    config: &Config,
    step: u64,
    teacher: Option<&dyn Teacher>,
    workers: usize,
) -> Result<Batch> {
    let seed = batch_seed(config, step);
    let counts = data.frame_counts();
    let build = |i: usize| -> Result<CrossQualityPair> {
        let mut rng = rng_for(seed, &[i as u64, 1]);
        let p = sample_pair_indices(&counts, config.training.max_frame_gap, &mut rng)?;
        let source = data.frame(p.clip, p.source);
        let driving = data.frame(p.clip, p.driving);
        build_quadruple(source, driving, driving, &config.degradation, teacher, derive_seed(seed, &[i as u64, 2]))
    };
    let n = config.training.batch_size;
    let pairs: Vec<CrossQualityPair> = if workers <= 1 || n == 1 {
        (0..n).map(build).collect::<Result<_>>()?
    } else {
        let chunk = n.div_ceil(workers);
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..n)
                .step_by(chunk)
                .map(|lo| {
                    let build = &build;
                    s.spawn(move || (lo..(lo + chunk).min(n)).map(build).collect::<Result<Vec<_>>>())
                })
                .collect();
            let mut out = Vec::with_capacity(n);
            for h in handles {
                out.extend(h.join().expect("batch worker panicked")?);
            }
            Ok::<_, Error>(out)
        })?
    };
    Batch::new(pairs, seed)
}
