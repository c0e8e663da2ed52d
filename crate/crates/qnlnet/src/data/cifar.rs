//! Loader for CIFAR-10 binary batches (3,073-byte records: one label byte,
//! then 1,024 bytes per channel plane).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{RawDataset, RawSample};

const SIDE: usize = 32;
const PLANE: usize = SIDE * SIDE;
const RECORD: usize = 1 + 3 * PLANE;

/// Loads one or more binary batches into raw 32x32x3 samples. Channel
/// planes are interleaved to row-major [h, w, c] at load time.
pub fn load_cifar10<P: AsRef<Path>>(batch_paths: &[P]) -> Result<RawDataset> {
    if batch_paths.is_empty() {
        return Err(Error::Config("no batch files given".into()));
    }
    let mut samples = Vec::new();
    for path in batch_paths {
        let path = path.as_ref();
        let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
        if raw.len() % RECORD != 0 {
            return Err(Error::format(
                path,
                (raw.len() / RECORD * RECORD) as u64,
                format!(
                    "file size {} is not a multiple of the {RECORD}-byte record",
                    raw.len()
                ),
            ));
        }
        for (i, record) in raw.chunks_exact(RECORD).enumerate() {
            let label = record[0];
            if label > 9 {
                return Err(Error::format(
                    path,
                    (i * RECORD) as u64,
                    format!("label {label} out of range 0..=9"),
                ));
            }
            let planes = &record[1..];
            let mut bytes = vec![0u8; 3 * PLANE];
            for c in 0..3 {
                for p in 0..PLANE {
                    bytes[p * 3 + c] = planes[c * PLANE + p];
                }
            }
            samples.push(RawSample { label, bytes });
        }
    }
    Ok(RawDataset {
        name: "cifar10".into(),
        shape: [SIDE, SIDE, 3],
        samples,
    })
}
