//! Big-endian IDX containers (`idx3-ubyte` images, `idx1-ubyte` labels),
//! optionally gzip-compressed.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use super::{Dataset, IMAGE_SIDE};
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnistPart {
    Train,
    Test,
}

impl MnistPart {
    fn prefix(self) -> &'static str {
        match self {
            MnistPart::Train => "train",
            MnistPart::Test => "t10k",
        }
    }
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::Format {
                path: path.to_path_buf(),
                msg: format!("gzip stream: {e}"),
            })?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn header(bytes: &[u8], path: &Path, words: usize) -> Result<Vec<u32>> {
    if bytes.len() < 4 * words {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("header needs {} bytes, file has {}", 4 * words, bytes.len()),
        });
    }
    Ok(bytes[..4 * words]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn check_magic(observed: u32, expected: u32, path: &Path) -> Result<()> {
    if observed != expected {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!(
                "magic {observed} (0x{observed:08x}), expected {expected} (0x{expected:08x})"
            ),
        });
    }
    Ok(())
}

fn payload<'a>(bytes: &'a [u8], offset: usize, expected: u64, path: &Path) -> Result<&'a [u8]> {
    let found = (bytes.len() - offset) as u64;
    if found != expected {
        return Err(Error::Length {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(&bytes[offset..])
}

fn parse_images(bytes: &[u8], path: &Path) -> Result<(usize, Vec<u8>)> {
    let h = header(bytes, path, 1)?;
    check_magic(h[0], IMAGES_MAGIC, path)?;
    let h = header(bytes, path, 4)?;
    let (n, rows, cols) = (h[1] as u64, h[2] as usize, h[3] as usize);
    if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("images are {rows}×{cols}, expected {IMAGE_SIDE}×{IMAGE_SIDE}"),
        });
    }
    let data = payload(bytes, 16, n * (rows * cols) as u64, path)?;
    Ok((n as usize, data.to_vec()))
}

fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let h = header(bytes, path, 1)?;
    check_magic(h[0], LABELS_MAGIC, path)?;
    let h = header(bytes, path, 2)?;
    Ok(payload(bytes, 8, h[1] as u64, path)?.to_vec())
}

/// Parses an image file and its label file into a dataset.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let (n, images) = parse_images(&read_maybe_gz(images_path)?, images_path)?;
    let labels = parse_labels(&read_maybe_gz(labels_path)?, labels_path)?;
    if n != labels.len() {
        return Err(Error::Pairing {
            images: n,
            labels: labels.len(),
        });
    }
    let name = images_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mnist".into());
    Dataset::new(name, images, labels)
}

fn locate(dir: &Path, stem: &str) -> Result<PathBuf> {
    let plain = dir.join(stem);
    if plain.is_file() {
        return Ok(plain);
    }
    let gz = dir.join(format!("{stem}.gz"));
    if gz.is_file() {
        return Ok(gz);
    }
    Err(Error::io(
        plain,
        std::io::Error::new(
            std::io::ErrorKind::NotFound,
            "MNIST file not found (also tried .gz)",
        ),
    ))
}

/// Loads `train-*` or `t10k-*` files from a directory using the standard
/// MNIST file names.
pub fn load_mnist(dir: &Path, part: MnistPart) -> Result<Dataset> {
    let p = part.prefix();
    let images = locate(dir, &format!("{p}-images-idx3-ubyte"))?;
    let labels = locate(dir, &format!("{p}-labels-idx1-ubyte"))?;
    let mut d = load_idx(&images, &labels)?;
    d.name = format!("mnist-{p}");
    Ok(d)
}

pub fn encode_idx_images(d: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + d.images().len());
    for v in [
        IMAGES_MAGIC,
        d.len() as u32,
        IMAGE_SIDE as u32,
        IMAGE_SIDE as u32,
    ] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(d.images());
    out
}

pub fn encode_idx_labels(d: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + d.len());
    for v in [LABELS_MAGIC, d.len() as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(d.labels());
    out
}
