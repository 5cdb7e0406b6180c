//! MNIST datasets: IDX loading, the fixed train/validation split, seeded
//! subsampling, normalization, and a procedurally rendered stand-in.

mod idx;
mod synthetic;

use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::Tensor;

pub use idx::{encode_idx_images, encode_idx_labels, load_idx, load_mnist, MnistPart};
pub use synthetic::synthetic_digits;

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const NUM_CLASSES: usize = 10;
pub const MNIST_TRAIN_SIZE: usize = 60_000;
pub const TRAIN_SPLIT: usize = 55_000;
pub const VALIDATION_SPLIT: usize = 5_000;

/// Environment variable naming the default MNIST directory.
pub const DATA_DIR_ENV: &str = "GFNN_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    /// `len × 28 × 28` row-major intensities.
    images: Vec<u8>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, images: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        if images.len() != labels.len() * IMAGE_PIXELS {
            return Err(Error::Pairing {
                images: images.len() / IMAGE_PIXELS,
                labels: labels.len(),
            });
        }
        if let Some((i, &l)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize >= NUM_CLASSES)
        {
            return Err(Error::Data(format!(
                "label {l} at index {i} is not a digit"
            )));
        }
        Ok(Self {
            name: name.into(),
            images,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        &self.images[i * IMAGE_PIXELS..(i + 1) * IMAGE_PIXELS]
    }

    pub fn images(&self) -> &[u8] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn labels_usize(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l as usize).collect()
    }

    /// Samples at `indices`, in that order.
    pub fn select(&self, name: impl Into<String>, indices: &[usize]) -> Result<Self> {
        let mut images = Vec::with_capacity(indices.len() * IMAGE_PIXELS);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::Parameter(format!(
                    "index {i} out of range for dataset of {}",
                    self.len()
                )));
            }
            images.extend_from_slice(self.image(i));
            labels.push(self.labels[i]);
        }
        Self::new(name, images, labels)
    }

    fn range(&self, name: String, start: usize, end: usize) -> Self {
        Self {
            name,
            images: self.images[start * IMAGE_PIXELS..end * IMAGE_PIXELS].to_vec(),
            labels: self.labels[start..end].to_vec(),
        }
    }

    /// CRC-32 over pixels then labels.
    pub fn checksum(&self) -> u32 {
        let mut h = crc32fast::Hasher::new();
        h.update(&self.images);
        h.update(&self.labels);
        h.finalize()
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut c = [0; NUM_CLASSES];
        for &l in &self.labels {
            c[l as usize] += 1;
        }
        c
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub validation: Dataset,
}

impl Split {
    /// First `len − validation` samples train, the rest validate.
    pub fn holdout(d: &Dataset, validation: usize) -> Result<Self> {
        if validation == 0 || validation >= d.len() {
            return Err(Error::Parameter(format!(
                "validation size {validation} must be in 1..{}",
                d.len()
            )));
        }
        let cut = d.len() - validation;
        Ok(Self {
            train: d.range(format!("{}[train]", d.name), 0, cut),
            validation: d.range(format!("{}[val]", d.name), cut, d.len()),
        })
    }
}

/// The standard 55000/5000 partition of the 60000-image training file, in
/// file order.
pub fn split_train_val(d: &Dataset) -> Result<Split> {
    if d.len() != MNIST_TRAIN_SIZE {
        return Err(Error::Parameter(format!(
            "train/validation split requires exactly {MNIST_TRAIN_SIZE} samples, got {}",
            d.len()
        )));
    }
    Split::holdout(d, VALIDATION_SPLIT)
}

/// `n` samples drawn without replacement with the repository generator.
pub fn subsample(d: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    if n > d.len() {
        return Err(Error::Parameter(format!(
            "cannot subsample {n} from a dataset of {}",
            d.len()
        )));
    }
    let idx = SplitMix64::new(seed).sample_indices(d.len(), n);
    d.select(format!("{}[{n}@{seed}]", d.name), &idx)
}

/// Intensities scaled to `[0, 1]` as `N × 28 × 28 × 1`.
pub fn normalize(d: &Dataset) -> Result<Tensor<f32>> {
    let data = d.images.iter().map(|&p| p as f32 / 255.0).collect();
    Tensor::new(&[d.len().max(1), IMAGE_SIDE, IMAGE_SIDE, 1], data)
        .map_err(|_| Error::Parameter("cannot normalize an empty dataset".into()))
}

/// Loads `train` and splits it 55000/5000.
pub fn load_train_split(dir: &Path) -> Result<Split> {
    split_train_val(&load_mnist(dir, MnistPart::Train)?)
}
