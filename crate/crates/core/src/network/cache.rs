//! On-disk cache of the frozen layer's pooled output.
//!
//! Layout (little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `GFNC`                            |
//! | 4      | 4    | dataset CRC-32 ([`Dataset::checksum`])  |
//! | 8      | 4    | bank CRC-32 ([`Network::layer1_checksum`]) |
//! | 12     | 8    | record count N                          |
//! | 20     | 4    | values per record                       |
//! | 24     | …    | N records of `f32`, sample order        |

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};

use super::Network;
use crate::data::{Dataset, IMAGE_PIXELS, IMAGE_SIDE};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::Tensor;

pub const CACHE_MAGIC: [u8; 4] = *b"GFNC";
const HEADER_LEN: u64 = 24;
const CHUNK: usize = 64;

#[derive(Debug)]
pub struct FeatureCache {
    path: PathBuf,
    dataset_checksum: u32,
    bank_checksum: u32,
    count: usize,
    record_len: usize,
    feature_shape: [usize; 3],
    file: File,
}

/// Layer-1 features read back from a cache, tagged with the bank they were
/// computed with.
#[derive(Debug, Clone)]
pub struct CachedBatch {
    pub features: Tensor<f32>,
    pub bank_checksum: u32,
}

struct Header {
    dataset_checksum: u32,
    bank_checksum: u32,
    count: usize,
    record_len: usize,
}

fn read_header(file: &mut File, path: &Path) -> Result<Header> {
    let mut buf = [0u8; HEADER_LEN as usize];
    file.read_exact(&mut buf).map_err(|_| Error::StaleCache {
        path: path.to_path_buf(),
        msg: "file is shorter than the cache header".into(),
    })?;
    if buf[..4] != CACHE_MAGIC {
        return Err(Error::StaleCache {
            path: path.to_path_buf(),
            msg: "not a feature cache (bad magic)".into(),
        });
    }
    let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
    Ok(Header {
        dataset_checksum: u32_at(4),
        bank_checksum: u32_at(8),
        count: u64::from_le_bytes(buf[12..20].try_into().unwrap()) as usize,
        record_len: u32_at(20) as usize,
    })
}

fn normalized(d: &Dataset, start: usize, n: usize) -> Result<Tensor<f32>> {
    let px = &d.images()[start * IMAGE_PIXELS..(start + n) * IMAGE_PIXELS];
    Tensor::new(
        &[n, IMAGE_SIDE, IMAGE_SIDE, 1],
        px.iter().map(|&p| p as f32 / 255.0).collect(),
    )
}

impl FeatureCache {
    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn dataset_checksum(&self) -> u32 {
        self.dataset_checksum
    }

    pub fn bank_checksum(&self) -> u32 {
        self.bank_checksum
    }

    pub fn record_len(&self) -> usize {
        self.record_len
    }

    /// Reads the given records, in order, as `B × s × s × channels`.
    pub fn read_batch(&self, rows: &[usize]) -> Result<CachedBatch> {
        let mut bytes = vec![0u8; self.record_len * 4];
        let mut data = Vec::with_capacity(rows.len() * self.record_len);
        for &r in rows {
            if r >= self.count {
                return Err(Error::Parameter(format!(
                    "cache row {r} out of range for {} records",
                    self.count
                )));
            }
            let offset = HEADER_LEN + (r * self.record_len * 4) as u64;
            self.file
                .read_exact_at(&mut bytes, offset)
                .map_err(|e| Error::io(&self.path, e))?;
            data.extend(
                bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])),
            );
        }
        let [h, w, c] = self.feature_shape;
        Ok(CachedBatch {
            features: Tensor::new(&[rows.len(), h, w, c], data)?,
            bank_checksum: self.bank_checksum,
        })
    }
}

/// Computes conv1 → relu → pool once per sample and stores it at `path`.
///
/// If `path` already holds a cache for the same dataset and bank it is reused
/// as is; a cache built from anything else is rejected as stale rather than
/// silently overwritten.
pub fn precompute_features(
    net: &Network<f32>,
    dataset: &Dataset,
    path: &Path,
) -> Result<FeatureCache> {
    if !net.is_frozen() {
        return Err(Error::Config("cache requires frozen first layer".into()));
    }
    if net.config().input_size != IMAGE_SIDE {
        return Err(Error::Config(format!(
            "feature cache needs {IMAGE_SIDE}×{IMAGE_SIDE} inputs"
        )));
    }
    if dataset.is_empty() {
        return Err(Error::Parameter("cannot cache an empty dataset".into()));
    }
    let dataset_checksum = dataset.checksum();
    let bank_checksum = net.layer1_checksum();
    let record_len = net.config().feature_len();
    let feature_shape = net.config().feature_shape();

    if path.exists() {
        let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
        let h = read_header(&mut file, path)?;
        let stale = |msg: String| Error::StaleCache {
            path: path.to_path_buf(),
            msg,
        };
        if h.dataset_checksum != dataset_checksum {
            return Err(stale(format!(
                "dataset checksum {:08x} does not match {:08x}",
                h.dataset_checksum, dataset_checksum
            )));
        }
        if h.bank_checksum != bank_checksum {
            return Err(stale(format!(
                "bank checksum {:08x} does not match {:08x}",
                h.bank_checksum, bank_checksum
            )));
        }
        if h.count != dataset.len() || h.record_len != record_len {
            return Err(stale("record count or size differs".into()));
        }
        let expected = HEADER_LEN + (h.count * h.record_len * 4) as u64;
        let actual = file.metadata().map_err(|e| Error::io(path, e))?.len();
        if actual != expected {
            return Err(stale(format!(
                "file has {actual} bytes, expected {expected}"
            )));
        }
        return Ok(FeatureCache {
            path: path.to_path_buf(),
            dataset_checksum,
            bank_checksum,
            count: h.count,
            record_len,
            feature_shape,
            file,
        });
    }

    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        let mut header = Vec::with_capacity(HEADER_LEN as usize);
        header.extend_from_slice(&CACHE_MAGIC);
        header.extend_from_slice(&dataset_checksum.to_le_bytes());
        header.extend_from_slice(&bank_checksum.to_le_bytes());
        header.extend_from_slice(&(dataset.len() as u64).to_le_bytes());
        header.extend_from_slice(&(record_len as u32).to_le_bytes());
        w.write_all(&header).map_err(|e| Error::io(path, e))?;

        let mut start = 0;
        while start < dataset.len() {
            let n = CHUNK.min(dataset.len() - start);
            let (features, _) = net.layer1_forward(&normalized(dataset, start, n)?)?;
            for v in features.data() {
                w.write_all(&v.to_le_bytes())
                    .map_err(|e| Error::io(path, e))?;
            }
            start += n;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    let file = tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(FeatureCache {
        path: path.to_path_buf(),
        dataset_checksum,
        bank_checksum,
        count: dataset.len(),
        record_len,
        feature_shape,
        file,
    })
}

impl Network<f32> {
    /// Forward pass from cached layer-1 features. Fails if the cache was
    /// built with different layer-1 weights.
    pub fn forward_from_cache(
        &self,
        batch: &CachedBatch,
        training: bool,
        rng: &mut SplitMix64,
    ) -> Result<(Tensor<f32>, super::ForwardTrace<f32>)> {
        if batch.bank_checksum != self.layer1_checksum() {
            return Err(Error::StaleCache {
                path: PathBuf::new(),
                msg: format!(
                    "cached features were computed with bank {:08x}, network holds {:08x}",
                    batch.bank_checksum,
                    self.layer1_checksum()
                ),
            });
        }
        self.forward_from_features(&batch.features, training, rng)
    }
}
