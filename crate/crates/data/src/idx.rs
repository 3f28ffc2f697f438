//! IDX binary format (the MNIST / Fashion-MNIST distribution format).
//!
//! Big-endian: two zero bytes, a type code, the number of dimensions, one
//! `u32` per dimension, then the payload. Only unsigned-byte payloads (type
//! `0x08`) are supported, which covers both datasets.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::dataset::Dataset;
use crate::error::{DataError, Result};

const UBYTE: u8 = 0x08;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxArray> {
    let err = |m: String| DataError::Idx(m);
    if bytes.len() < 4 {
        return Err(err("shorter than the magic number".into()));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(err("magic number must start with two zero bytes".into()));
    }
    if bytes[2] != UBYTE {
        return Err(err(format!("unsupported element type 0x{:02x}", bytes[2])));
    }
    let ndims = bytes[3] as usize;
    if ndims == 0 {
        return Err(err("zero dimensions".into()));
    }
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(err("truncated dimension table".into()));
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| err("element count overflows".into()))?;
    let payload = &bytes[header..];
    if payload.len() != count {
        return Err(err(format!(
            "dims {dims:?} need {count} bytes, payload has {}",
            payload.len()
        )));
    }
    Ok(IdxArray {
        dims,
        data: payload.to_vec(),
    })
}

/// Reads an IDX file, transparently inflating gzip.
pub fn read_idx_file(path: &Path) -> Result<IdxArray> {
    let raw = fs::read(path).map_err(|e| DataError::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| DataError::io(path, e))?;
        parse_idx(&out)
    } else {
        parse_idx(&raw)
    }
}

/// Combines an image array `[n, rows, cols]` and label array `[n]` into a
/// dataset with pixels scaled to `[0, 1]`.
pub fn images_to_dataset(name: &str, images: IdxArray, labels: IdxArray, classes: usize) -> Result<Dataset> {
    if images.dims.len() != 3 || labels.dims.len() != 1 {
        return Err(DataError::Idx(format!(
            "expected [n, rows, cols] images and [n] labels, got {:?} and {:?}",
            images.dims, labels.dims
        )));
    }
    if images.dims[0] != labels.dims[0] {
        return Err(DataError::Idx(format!(
            "{} images but {} labels",
            images.dims[0], labels.dims[0]
        )));
    }
    let width = images.dims[1] * images.dims[2];
    let features = images.data.iter().map(|&p| p as f64 / 255.0).collect();
    let labels = labels.data.iter().map(|&l| l as usize).collect();
    Dataset::new(name, classes, width, features, labels)
}

fn find(dir: &Path, stem: &str) -> Result<PathBuf> {
    for candidate in [format!("{stem}.gz"), stem.to_string()] {
        let p = dir.join(candidate);
        if p.exists() {
            return Ok(p);
        }
    }
    Err(DataError::io(
        &dir.join(stem),
        std::io::Error::new(std::io::ErrorKind::NotFound, "IDX file not found (plain or .gz)"),
    ))
}

/// Loads the standard `train-*` / `t10k-*` file quadruple from `dir`
/// (MNIST and Fashion-MNIST share the naming), optionally truncated.
pub fn load_mnist_dir(
    dir: &Path,
    name: &str,
    train_limit: Option<usize>,
    test_limit: Option<usize>,
) -> Result<(Dataset, Dataset)> {
    let load = |prefix: &str, limit: Option<usize>| -> Result<Dataset> {
        let images = read_idx_file(&find(dir, &format!("{prefix}-images-idx3-ubyte"))?)?;
        let labels = read_idx_file(&find(dir, &format!("{prefix}-labels-idx1-ubyte"))?)?;
        let ds = images_to_dataset(name, images, labels, 10)?;
        Ok(match limit {
            Some(n) => ds.truncated(n),
            None => ds,
        })
    };
    Ok((load("train", train_limit)?, load("t10k", test_limit)?))
}

/// Encodes a ubyte array in IDX layout.
pub fn encode_idx(array: &IdxArray) -> Vec<u8> {
    let mut out = vec![0, 0, UBYTE, array.dims.len() as u8];
    for &d in &array.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&array.data);
    out
}
