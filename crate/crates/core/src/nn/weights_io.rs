//! Weights file, little-endian: magic `FLNW`, `u32` version, `f64` label
//! scale, `u32` layer count, one record per layer, `u64` parameter count, then
//! the parameters as `f32`.
//!
//! Layer record: `u8` kind (0 conv, 1 dense), `u8` relu flag, then
//! `u32 in_channels, out_channels, kernel, stride, in_size` for conv or
//! `u32 inputs, outputs` for dense.

use std::io::{Read, Write};
use std::path::Path;

use super::network::{Layer, LayerSpec, ModelWeights};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FLNW";
const VERSION: u32 = 1;

pub fn encode_weights(weights: &ModelWeights) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + weights.params().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&weights.label_scale().to_le_bytes());
    out.extend_from_slice(&(weights.layers().len() as u32).to_le_bytes());
    for spec in weights.layers() {
        let dims: Vec<usize> = match spec.layer {
            Layer::Conv {
                in_channels,
                out_channels,
                kernel,
                stride,
                in_size,
            } => {
                out.push(0);
                vec![in_channels, out_channels, kernel, stride, in_size]
            }
            Layer::Dense { inputs, outputs } => {
                out.push(1);
                vec![inputs, outputs]
            }
        };
        out.push(spec.relu as u8);
        for d in dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    out.extend_from_slice(&(weights.params().len() as u64).to_le_bytes());
    for &p in weights.params() {
        out.extend_from_slice(&(p as f32).to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at + n;
        let slice = self
            .bytes
            .get(self.at..end)
            .ok_or_else(|| Error::format("weights file", "truncated"))?;
        self.at = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn usize32(&mut self) -> Result<usize> {
        self.u32().map(|v| v as usize)
    }
}

pub fn decode_weights(bytes: &[u8]) -> Result<ModelWeights> {
    let mut cur = Cursor { bytes, at: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::format("weights file", "bad magic"));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::format("weights file", format!("unsupported version {version}")));
    }
    let label_scale = f64::from_le_bytes(cur.take(8)?.try_into().unwrap());
    let n_layers = cur.u32()?;
    let mut layers = Vec::with_capacity(n_layers as usize);
    for _ in 0..n_layers {
        let kind = cur.u8()?;
        let relu = cur.u8()? != 0;
        let layer = match kind {
            0 => Layer::Conv {
                in_channels: cur.usize32()?,
                out_channels: cur.usize32()?,
                kernel: cur.usize32()?,
                stride: cur.usize32()?,
                in_size: cur.usize32()?,
            },
            1 => Layer::Dense {
                inputs: cur.usize32()?,
                outputs: cur.usize32()?,
            },
            other => return Err(Error::format("weights file", format!("unknown layer kind {other}"))),
        };
        layers.push(LayerSpec { layer, relu });
    }
    let n = u64::from_le_bytes(cur.take(8)?.try_into().unwrap()) as usize;
    let raw = cur.take(n.checked_mul(4).ok_or_else(|| Error::format("weights file", "size overflow"))?)?;
    let params = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    if cur.at != bytes.len() {
        return Err(Error::format("weights file", "trailing bytes"));
    }
    ModelWeights::new(layers, params, label_scale)
}

/// Hex SHA-256 of the encoded weights.
pub fn weights_hash(weights: &ModelWeights) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(encode_weights(weights))
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn save_weights(path: &Path, weights: &ModelWeights) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_weights(weights)).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: &Path) -> Result<ModelWeights> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::network::{forward, value_net_layers};
    use crate::nn::state::{NetState, STATE_LEN};

    #[test]
    fn save_load_forward_is_identical() {
        let mut w = ModelWeights::init(value_net_layers(), 29.0, 5).unwrap();
        w.quantize_f32();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        save_weights(&path, &w).unwrap();
        let back = load_weights(&path).unwrap();
        assert_eq!(back, w);
        let state = NetState::from_vec((0..STATE_LEN).map(|i| (i % 5 == 0) as u8 as f32).collect()).unwrap();
        assert_eq!(forward(&w, &state).unwrap(), forward(&back, &state).unwrap());
    }

    #[test]
    fn rejects_corrupt_files() {
        let w = ModelWeights::zeros(value_net_layers(), 1.0).unwrap();
        let mut bytes = encode_weights(&w);
        assert!(decode_weights(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(decode_weights(&bytes).is_err());
    }
}
