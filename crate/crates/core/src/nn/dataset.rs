//! Labelled (state, future return) records and their binary file format.
//!
//! Layout, little-endian: magic `FLDS`, `u32` version, `u64` record count,
//! three `u32` state dimensions (2, 50, 50), then per record 5000 `f32`
//! state values followed by one `f32` label.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::state::{NetState, STATE_CHANNELS, STATE_LEN, STATE_SIDE};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FLDS";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    states: Arc<Vec<NetState>>,
    labels: Vec<f32>,
}

impl Dataset {
    pub fn new(states: Vec<NetState>, labels: Vec<f32>) -> Result<Self> {
        Self::check(states.len(), &labels)?;
        Ok(Self {
            states: Arc::new(states),
            labels,
        })
    }

    fn check(n_states: usize, labels: &[f32]) -> Result<()> {
        if n_states == 0 {
            return Err(Error::Contract("dataset must hold at least one record".into()));
        }
        if n_states != labels.len() {
            return Err(Error::Contract(format!(
                "{n_states} states but {} labels",
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|l| !l.is_finite()) {
            return Err(Error::Numeric(format!("dataset label {bad}")));
        }
        Ok(())
    }

    /// Same states with different labels, e.g. another look-ahead depth.
    pub fn relabel(&self, labels: Vec<f32>) -> Result<Self> {
        Self::check(self.states.len(), &labels)?;
        Ok(Self {
            states: Arc::clone(&self.states),
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn states(&self) -> &[NetState] {
        &self.states
    }

    pub fn labels(&self) -> &[f32] {
        &self.labels
    }

    /// Records `[0, split)` train, `[split, n)` validate; the validation
    /// share is 10% (at least one record once n ≥ 2).
    pub fn validation_split(&self) -> usize {
        let n = self.len();
        if n < 2 {
            return n;
        }
        n - (n / 10).max(1)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(self.len() as u64).to_le_bytes()).map_err(io)?;
        for dim in [STATE_CHANNELS, STATE_SIDE, STATE_SIDE] {
            w.write_all(&(dim as u32).to_le_bytes()).map_err(io)?;
        }
        let mut buf = Vec::with_capacity((STATE_LEN + 1) * 4);
        for (state, &label) in self.states.iter().zip(&self.labels) {
            buf.clear();
            for v in state.as_slice() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            buf.extend_from_slice(&label.to_le_bytes());
            w.write_all(&buf).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let io = |e| Error::io(path, e);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::format("dataset file", "bad magic"));
        }
        let version = read_u32(&mut r).map_err(io)?;
        if version != VERSION {
            return Err(Error::format("dataset file", format!("unsupported version {version}")));
        }
        let mut n8 = [0u8; 8];
        r.read_exact(&mut n8).map_err(io)?;
        let n = u64::from_le_bytes(n8) as usize;
        let dims = [
            read_u32(&mut r).map_err(io)?,
            read_u32(&mut r).map_err(io)?,
            read_u32(&mut r).map_err(io)?,
        ];
        if dims != [STATE_CHANNELS as u32, STATE_SIDE as u32, STATE_SIDE as u32] {
            return Err(Error::format("dataset file", format!("state dims {dims:?}")));
        }
        let mut states = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut buf = vec![0u8; (STATE_LEN + 1) * 4];
        for i in 0..n {
            r.read_exact(&mut buf).map_err(io)?;
            let mut vals: Vec<f32> = buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            labels.push(vals.pop().unwrap());
            let state = NetState::from_vec(vals)
                .ok_or_else(|| Error::format("dataset file", format!("record {i} has values outside [0, 1]")))?;
            states.push(state);
        }
        Self::new(states, labels)
    }
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
