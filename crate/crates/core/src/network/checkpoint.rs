//! Versioned binary checkpoints (little-endian).
//!
//! ```text
//! magic "GFNN" | version u16
//! config: arch u8 | frozen u8 | input u32 | conv channels 3×u32 | hidden u32
//!         | classes u32 | dropout f64 | init seed u64
//! blob count u16
//! per blob: param id u8 | value count u32 | values f32… | CRC-32 of the value bytes
//! ```

use std::io::{Cursor, Read};
use std::path::Path;

use super::{Arch, Network, NetworkConfig, ParamId};
use crate::error::{Error, Result};
use crate::kernel_bank::build_bank;
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"GFNN";
pub const CHECKPOINT_VERSION: u16 = 1;

fn encode(net: &Network<f32>) -> Vec<u8> {
    let c = net.config();
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(match c.arch {
        Arch::Cnn => 0,
        Arch::Gfnn => 1,
    });
    out.push(net.is_frozen() as u8);
    for v in [
        c.input_size,
        c.conv_channels[0],
        c.conv_channels[1],
        c.conv_channels[2],
        c.hidden,
        c.classes,
    ] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&c.dropout_rate.to_le_bytes());
    out.extend_from_slice(&c.init_seed.to_le_bytes());
    out.extend_from_slice(&(ParamId::ALL.len() as u16).to_le_bytes());
    for id in ParamId::ALL {
        let t = net.param(id);
        out.push(id as u8);
        out.extend_from_slice(&(t.len() as u32).to_le_bytes());
        let start = out.len();
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
    }
    out
}

/// Writes atomically: temp file in the target directory, then rename.
pub fn save_checkpoint(net: &Network<f32>, path: &Path) -> Result<()> {
    crate::fsutil::write_atomic(path, &encode(net))
}

struct Reader<'a>(Cursor<&'a [u8]>);

impl Reader<'_> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0
            .read_exact(&mut b)
            .map_err(|_| Error::Checkpoint("file is truncated".into()))?;
        Ok(b)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Network<f32>> {
    let mut r = Reader(Cursor::new(bytes));
    if r.bytes::<4>()? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic, not a checkpoint".into()));
    }
    let version = r.u16()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {version}, expected version {CHECKPOINT_VERSION}"
        )));
    }
    let arch = match r.u8()? {
        0 => Arch::Cnn,
        1 => Arch::Gfnn,
        other => {
            return Err(Error::Checkpoint(format!(
                "unknown architecture tag {other}"
            )))
        }
    };
    let frozen = r.u8()? != 0;
    let mut dims = [0usize; 6];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let config = NetworkConfig {
        arch,
        input_size: dims[0],
        conv_channels: [dims[1], dims[2], dims[3]],
        hidden: dims[4],
        classes: dims[5],
        dropout_rate: r.f64()?,
        init_seed: r.u64()?,
    };
    // Guard absurd headers before allocating.
    if dims.iter().any(|&d| d > 1 << 16) {
        return Err(Error::Checkpoint("layer dimensions out of range".into()));
    }
    let mut net = Network::<f32>::zeroed(config).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if frozen != net.is_frozen() {
        return Err(Error::Checkpoint(
            "frozen flag disagrees with architecture".into(),
        ));
    }

    let blobs = r.u16()? as usize;
    if blobs != ParamId::ALL.len() {
        return Err(Error::Checkpoint(format!(
            "{blobs} parameter blobs, expected {}",
            ParamId::ALL.len()
        )));
    }
    for expected in ParamId::ALL {
        let id = ParamId::from_index(r.u8()?)
            .ok_or_else(|| Error::Checkpoint("unknown parameter id".into()))?;
        if id != expected {
            return Err(Error::Checkpoint(format!("parameter {id:?} out of order")));
        }
        let n = r.u32()? as usize;
        let shape = net.param(id).shape().to_vec();
        if n != net.param(id).len() {
            return Err(Error::Checkpoint(format!(
                "{id:?} has {n} values, config implies {}",
                net.param(id).len()
            )));
        }
        let start = r.0.position() as usize;
        let end = start + 4 * n;
        let raw = bytes
            .get(start..end)
            .ok_or_else(|| Error::Checkpoint("file is truncated".into()))?;
        r.0.set_position(end as u64);
        if r.u32()? != crc32fast::hash(raw) {
            return Err(Error::Checkpoint(format!("checksum mismatch in {id:?}")));
        }
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        net.set_param(id, Tensor::new(&shape, values)?)?;
    }
    if (r.0.position() as usize) != bytes.len() {
        return Err(Error::Checkpoint(
            "trailing bytes after last parameter".into(),
        ));
    }
    if arch == Arch::Gfnn && net.layer1_checksum() != build_bank().checksum() {
        return Err(Error::Checkpoint(
            "GFNN layer 1 does not hold the kernel bank".into(),
        ));
    }
    Ok(net)
}

pub fn load_checkpoint(path: &Path) -> Result<Network<f32>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(arch: Arch) -> Network<f32> {
        let cfg = NetworkConfig {
            arch,
            input_size: 8,
            conv_channels: [41, 3, 2],
            hidden: 5,
            classes: 3,
            dropout_rate: 0.25,
            init_seed: 4,
        };
        Network::build(cfg, Some(&build_bank())).unwrap()
    }

    #[test]
    fn round_trip_bit_exact() {
        for arch in Arch::BOTH {
            let net = tiny(arch);
            let back = decode(&encode(&net)).unwrap();
            assert!(back.params_bit_eq(&net));
            assert_eq!(back.config(), net.config());
            assert_eq!(back.is_frozen(), net.is_frozen());
        }
    }

    #[test]
    fn every_truncation_fails() {
        let bytes = encode(&tiny(Arch::Cnn));
        for cut in [0, 3, 5, 20, 40, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(decode(&bytes[..cut]), Err(Error::Checkpoint(_))),
                "cut {cut}"
            );
        }
    }

    #[test]
    fn version_mismatch_names_expected() {
        let mut bytes = encode(&tiny(Arch::Cnn));
        bytes[4] = 9;
        let err = decode(&bytes).unwrap_err().to_string();
        assert!(err.contains("expected version 1"), "{err}");
    }

    #[test]
    fn corrupted_value_detected() {
        let mut bytes = encode(&tiny(Arch::Cnn));
        let n = bytes.len();
        bytes[n - 8] ^= 0x40;
        assert!(decode(&bytes).unwrap_err().to_string().contains("checksum"));
    }
}
