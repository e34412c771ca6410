//! MNIST in the big-endian IDX format.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1};

use crate::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Grayscale digits scaled to `[0, 1]`, one image per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Array2<f32>,
    pub labels: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn file_names(self) -> (&'static str, &'static str) {
        match self {
            Split::Train => ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
            Split::Test => ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
        }
    }
}

impl Dataset {
    pub fn new(images: Array2<f32>, labels: Vec<u8>) -> Result<Self> {
        if images.nrows() != labels.len() {
            return Err(Error::CountMismatch {
                images: images.nrows(),
                labels: labels.len(),
            });
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn pixels(&self) -> usize {
        self.images.ncols()
    }

    pub fn image(&self, i: usize) -> ArrayView1<'_, f32> {
        self.images.row(i)
    }

    /// The first `n` examples (or all of them, if there are fewer).
    pub fn head(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            images: self.images.slice(ndarray::s![..n, ..]).to_owned(),
            labels: self.labels[..n].to_vec(),
        }
    }
}

/// Loads one split from a directory holding the four canonical IDX files.
pub fn load_mnist(dir: &Path, split: Split) -> Result<Dataset> {
    let (images, labels) = split.file_names();
    let (rows, cols, pixels) = read_idx_images(&dir.join(images))?;
    let labels = read_idx_labels(&dir.join(labels))?;
    let n = pixels.len() / (rows * cols).max(1);
    if n != labels.len() {
        return Err(Error::CountMismatch {
            images: n,
            labels: labels.len(),
        });
    }
    let images = Array2::from_shape_vec((n, rows * cols), pixels.into_iter().map(|b| b as f32 / 255.0).collect())
        .expect("shape checked above");
    Ok(Dataset { images, labels })
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Truncated {
            path: path.to_path_buf(),
            len: bytes.len(),
            needed: offset + 4,
        })
}

/// Returns `(rows, cols, pixel bytes)`.
pub fn read_idx_images(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    parse_idx_images(&read(path)?, path)
}

pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != IMAGE_MAGIC {
        return Err(bad_magic(path, magic, IMAGE_MAGIC));
    }
    let count = be_u32(bytes, 4, path)? as usize;
    let rows = be_u32(bytes, 8, path)? as usize;
    let cols = be_u32(bytes, 12, path)? as usize;
    let body = payload(bytes, 16, count * rows * cols, path)?;
    Ok((rows, cols, body.to_vec()))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    parse_idx_labels(&read(path)?, path)
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != LABEL_MAGIC {
        return Err(bad_magic(path, magic, LABEL_MAGIC));
    }
    let count = be_u32(bytes, 4, path)? as usize;
    Ok(payload(bytes, 8, count, path)?.to_vec())
}

fn payload<'a>(bytes: &'a [u8], offset: usize, len: usize, path: &Path) -> Result<&'a [u8]> {
    bytes.get(offset..offset + len).ok_or_else(|| Error::Truncated {
        path: path.to_path_buf(),
        len: bytes.len(),
        needed: offset + len,
    })
}

fn bad_magic(path: &Path, found: u32, expected: u32) -> Error {
    Error::BadMagic {
        path: PathBuf::from(path),
        found,
        expected,
    }
}
