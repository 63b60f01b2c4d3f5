//! Binary checkpoint of trained parameters plus the training config.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic       8 bytes   "MAGCKPT\0"
//! version     u32       currently 1
//! config_len  u64
//! config      config_len bytes of UTF-8 JSON (TrainConfig)
//! count       u32       number of matrices
//! per matrix:
//!   name_len  u32
//!   name      name_len bytes of UTF-8 ("backbone.0", "discriminator.1", ...)
//!   rows      u64
//!   cols      u64
//!   data      rows * cols f64, row-major
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{MagError, Result};
use crate::model::ModelParams;
use crate::trainer::TrainConfig;

pub const MAGIC: &[u8; 8] = b"MAGCKPT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub config: TrainConfig,
}

pub fn encode_checkpoint(params: &ModelParams, config: &TrainConfig) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(config)
        .map_err(|e| MagError::Checkpoint(format!("cannot encode config: {e}")))?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    let mats = params.named_matrices();
    out.extend_from_slice(&(mats.len() as u32).to_le_bytes());
    for (name, m) in mats {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
        out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
        for v in m.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                MagError::Checkpoint(format!(
                    "truncated: wanted {n} bytes at offset {}",
                    self.pos
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| MagError::Checkpoint("length overflow".into()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(MagError::Checkpoint(
            "not a checkpoint file (bad magic)".into(),
        ));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(MagError::Checkpoint(format!(
            "checkpoint version {version}, this build reads version {VERSION}"
        )));
    }
    let config_len = r.len()?;
    let config: TrainConfig = serde_json::from_slice(r.take(config_len)?)
        .map_err(|e| MagError::Checkpoint(format!("bad config block: {e}")))?;
    let count = r.u32()? as usize;
    let mut mats = Vec::with_capacity(count.min(64));
    for k in 0..count {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| MagError::Checkpoint(format!("matrix {k}: name is not UTF-8")))?
            .to_string();
        let (rows, cols) = (r.len()?, r.len()?);
        let byte_len = rows
            .checked_mul(cols)
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| MagError::Checkpoint(format!("{name}: size overflow")))?;
        let data: Vec<f64> = r
            .take(byte_len)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let m = Array2::from_shape_vec((rows, cols), data)
            .map_err(|e| MagError::Checkpoint(format!("{name}: {e}")))?;
        mats.push((name, m));
    }
    if r.pos != bytes.len() {
        return Err(MagError::Checkpoint(format!(
            "{} trailing bytes after the last matrix",
            bytes.len() - r.pos
        )));
    }
    let expected: Vec<String> = (0..count)
        .map(|k| {
            if k < 2 {
                format!("backbone.{k}")
            } else {
                format!("discriminator.{}", k - 2)
            }
        })
        .collect();
    if mats.iter().map(|(n, _)| n).ne(expected.iter()) {
        return Err(MagError::Checkpoint(
            "unexpected matrix names or order".into(),
        ));
    }
    let params = ModelParams::from_matrices(mats.into_iter().map(|(_, m)| m).collect())
        .map_err(|e| MagError::Checkpoint(e.to_string()))?;
    Ok(Checkpoint { params, config })
}

pub fn save_checkpoint(path: &Path, params: &ModelParams, config: &TrainConfig) -> Result<()> {
    let bytes = encode_checkpoint(params, config)?;
    fs::write(path, bytes).map_err(|e| MagError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| MagError::io(path, e))?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrast::Preset;

    fn sample() -> (ModelParams, TrainConfig) {
        let cfg = TrainConfig::from_preset(Preset::MMag);
        (ModelParams::init(5, 3, 2, 8), cfg)
    }

    #[test]
    fn roundtrip_is_bitwise() {
        let (p, c) = sample();
        let back = decode_checkpoint(&encode_checkpoint(&p, &c).unwrap()).unwrap();
        assert_eq!(back.params, p);
        assert_eq!(back.config, c);
    }

    #[test]
    fn truncation_and_version_are_detected() {
        let (p, c) = sample();
        let bytes = encode_checkpoint(&p, &c).unwrap();
        for cut in [0, 5, 12, bytes.len() - 1] {
            assert!(matches!(
                decode_checkpoint(&bytes[..cut]),
                Err(MagError::Checkpoint(_))
            ));
        }
        let mut bumped = bytes.clone();
        bumped[8] = 2;
        let err = decode_checkpoint(&bumped).unwrap_err();
        assert!(err.to_string().contains("version 2"));
        let mut extra = bytes;
        extra.push(0);
        assert!(decode_checkpoint(&extra).is_err());
    }
}
