//! IDX-format loader for the MNIST image and label files.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};

use crate::error::{Error, Result};

use super::{RawDataset, RawSample};

const IMAGE_MAGIC: u32 = 2051;
const LABEL_MAGIC: u32 = 2049;
const SIDE: usize = 28;

fn read_u32(reader: &mut impl Read, path: &Path, offset: u64) -> Result<u32> {
    reader.read_u32::<BigEndian>().map_err(|_| {
        Error::format(path, offset, "file ends inside the header")
    })
}

/// Loads paired IDX image and label files into raw 28x28 grayscale
/// samples.
pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<RawDataset> {
    let file = File::open(images_path).map_err(|e| Error::io(images_path, e))?;
    let mut reader = BufReader::new(file);
    let magic = read_u32(&mut reader, images_path, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::format(
            images_path,
            0,
            format!("bad image magic {magic:#010x}, expected {IMAGE_MAGIC}"),
        ));
    }
    let count = read_u32(&mut reader, images_path, 4)? as usize;
    let rows = read_u32(&mut reader, images_path, 8)? as usize;
    let cols = read_u32(&mut reader, images_path, 12)? as usize;
    if rows != SIDE {
        return Err(Error::format(
            images_path,
            8,
            format!("expected {SIDE} rows, got {rows}"),
        ));
    }
    if cols != SIDE {
        return Err(Error::format(
            images_path,
            12,
            format!("expected {SIDE} columns, got {cols}"),
        ));
    }
    let expected = count * SIDE * SIDE;
    let mut pixels = Vec::with_capacity(expected);
    reader
        .read_to_end(&mut pixels)
        .map_err(|e| Error::io(images_path, e))?;
    if pixels.len() < expected {
        return Err(Error::format(
            images_path,
            16 + pixels.len() as u64,
            format!("truncated image data: expected {expected} bytes, got {}", pixels.len()),
        ));
    }
    if pixels.len() > expected {
        return Err(Error::format(
            images_path,
            16 + expected as u64,
            format!("{} trailing bytes after image data", pixels.len() - expected),
        ));
    }

    let file = File::open(labels_path).map_err(|e| Error::io(labels_path, e))?;
    let mut reader = BufReader::new(file);
    let magic = read_u32(&mut reader, labels_path, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::format(
            labels_path,
            0,
            format!("bad label magic {magic:#010x}, expected {LABEL_MAGIC}"),
        ));
    }
    let label_count = read_u32(&mut reader, labels_path, 4)? as usize;
    if label_count != count {
        return Err(Error::format(
            labels_path,
            4,
            format!("label count {label_count} does not match image count {count}"),
        ));
    }
    let mut labels = Vec::with_capacity(count);
    reader
        .read_to_end(&mut labels)
        .map_err(|e| Error::io(labels_path, e))?;
    if labels.len() != count {
        return Err(Error::format(
            labels_path,
            8 + labels.len().min(count) as u64,
            format!("expected {count} labels, got {}", labels.len()),
        ));
    }
    if let Some(i) = labels.iter().position(|&l| l > 9) {
        return Err(Error::format(
            labels_path,
            8 + i as u64,
            format!("label {} out of range 0..=9", labels[i]),
        ));
    }

    let samples = labels
        .into_iter()
        .zip(pixels.chunks_exact(SIDE * SIDE))
        .map(|(label, chunk)| RawSample {
            label,
            bytes: chunk.to_vec(),
        })
        .collect();
    Ok(RawDataset {
        name: "mnist".into(),
        shape: [SIDE, SIDE, 1],
        samples,
    })
}
