//! Dataset ingestion: raw binary loaders, two-class filtering, pixel
//! normalization with train-split statistics, and seeded shuffling.

pub mod cifar;
pub mod mnist;

pub use cifar::load_cifar10;
pub use mnist::load_mnist;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor;

/// One image as loaded from disk, pixels still raw bytes.
#[derive(Debug, Clone)]
pub struct RawSample {
    pub label: u8,
    /// Row-major [h, w, c].
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct RawDataset {
    pub name: String,
    pub shape: [usize; 3],
    pub samples: Vec<RawSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Train,
    Test,
}

/// A binary-classification sample. Pixels hold raw byte values until
/// [`normalize`] runs.
#[derive(Debug, Clone)]
pub struct Sample {
    pub pixels: Tensor,
    pub label: u8,
    pub source_class: u8,
}

/// Per-channel pixel statistics of [0,1]-scaled values. `from_train`
/// records provenance so test-split statistics can never normalize
/// anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub from_train: bool,
}

#[derive(Debug, Clone)]
pub struct SplitMeta {
    pub dataset: String,
    pub class_pair: (u8, u8),
    pub role: Role,
    pub norm: Option<NormStats>,
    pub label_counts: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub samples: Vec<Sample>,
    pub meta: SplitMeta,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Drops all samples past `limit`, keeping current order.
    pub fn truncate(&mut self, limit: usize) {
        self.samples.truncate(limit);
        self.meta.label_counts = count_labels(&self.samples);
    }
}

fn count_labels(samples: &[Sample]) -> [usize; 2] {
    let ones = samples.iter().filter(|s| s.label == 1).count();
    [samples.len() - ones, ones]
}

/// Keeps only `class_a` and `class_b` (relabeled 0 and 1), preserving
/// source order.
pub fn filter_and_relabel(
    raw: &RawDataset,
    class_a: u8,
    class_b: u8,
    role: Role,
) -> Result<DatasetSplit> {
    if class_a == class_b {
        return Err(Error::Config(format!(
            "class pair must be distinct, got ({class_a}, {class_b})"
        )));
    }
    let shape = raw.shape.to_vec();
    let samples: Vec<Sample> = raw
        .samples
        .iter()
        .filter(|s| s.label == class_a || s.label == class_b)
        .map(|s| {
            let pixels = Tensor::new(shape.clone(), s.bytes.iter().map(|&b| f64::from(b)).collect())?;
            Ok(Sample {
                pixels,
                label: u8::from(s.label == class_b),
                source_class: s.label,
            })
        })
        .collect::<Result<_>>()?;
    if samples.is_empty() {
        return Err(Error::Config(format!(
            "no samples with classes {class_a} or {class_b} in {}",
            raw.name
        )));
    }
    let label_counts = count_labels(&samples);
    Ok(DatasetSplit {
        samples,
        meta: SplitMeta {
            dataset: raw.name.clone(),
            class_pair: (class_a, class_b),
            role,
            norm: None,
            label_counts,
        },
    })
}

/// Per-channel mean and standard deviation of pixel/255 over a raw
/// training split.
pub fn fit_norm_stats(split: &DatasetSplit) -> Result<NormStats> {
    if split.meta.role != Role::Train {
        return Err(Error::Config(
            "normalization statistics must be fitted on the training split".into(),
        ));
    }
    if split.meta.norm.is_some() {
        return Err(Error::Config(
            "statistics must be fitted on raw pixels, split is already normalized".into(),
        ));
    }
    if split.is_empty() {
        return Err(Error::Config("cannot fit statistics on an empty split".into()));
    }
    let (_, _, channels) = split.samples[0].pixels.dims3()?;
    let mut sum = vec![0.0; channels];
    let mut sum_sq = vec![0.0; channels];
    let mut count = vec![0u64; channels];
    for sample in &split.samples {
        for (i, &v) in sample.pixels.data().iter().enumerate() {
            let c = i % channels;
            let x = v / 255.0;
            sum[c] += x;
            sum_sq[c] += x * x;
            count[c] += 1;
        }
    }
    let mean: Vec<f64> = sum.iter().zip(&count).map(|(s, &n)| s / n as f64).collect();
    let std: Vec<f64> = sum_sq
        .iter()
        .zip(&count)
        .zip(&mean)
        .map(|((sq, &n), m)| (sq / n as f64 - m * m).max(0.0).sqrt())
        .collect();
    if std.iter().any(|&s| s <= 1e-12) {
        return Err(Error::Fit(format!(
            "zero pixel standard deviation in channel statistics {std:?}"
        )));
    }
    Ok(NormStats {
        mean,
        std,
        from_train: true,
    })
}

/// Scales raw bytes to [0,1] and standardizes with train-split statistics.
pub fn normalize(split: &mut DatasetSplit, stats: &NormStats) -> Result<()> {
    if !stats.from_train {
        return Err(Error::Config(
            "refusing to normalize with statistics not fitted on a training split".into(),
        ));
    }
    if split.meta.norm.is_some() {
        return Err(Error::Config("split is already normalized".into()));
    }
    let (_, _, channels) = split.samples[0].pixels.dims3()?;
    if channels != stats.mean.len() || channels != stats.std.len() {
        return Err(Error::Shape(format!(
            "statistics cover {} channels, split has {channels}",
            stats.mean.len()
        )));
    }
    for sample in &mut split.samples {
        for (i, v) in sample.pixels.data_mut().iter_mut().enumerate() {
            let c = i % channels;
            *v = (*v / 255.0 - stats.mean[c]) / stats.std[c];
        }
    }
    split.meta.norm = Some(stats.clone());
    Ok(())
}

/// Deterministic Fisher-Yates permutation of the split's samples.
pub fn shuffle(split: &mut DatasetSplit, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = &mut split.samples;
    for i in (1..samples.len()).rev() {
        let j = rng.gen_range(0..=i);
        samples.swap(i, j);
    }
}
