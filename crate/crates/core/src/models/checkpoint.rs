//! Binary parameter dump, little-endian throughout:
//!
//! ```text
//! magic      8 bytes  "SBECKPT\0"
//! version    u32      1
//! seed       u64
//! count      u32      number of entries
//! entries:
//!   name_len u32, name (UTF-8)
//!   ndim     u32      always 2
//!   dims     u64 × ndim
//!   values   f64 × product(dims)
//! ```
//!
//! Only trainable parameters are written; a frozen embedding table is
//! rebuilt from its matrix file.

use std::path::Path;

use crate::engine::{ParamStore, Tensor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SBECKPT\0";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointEntry {
    pub name: String,
    pub value: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub seed: u64,
    pub entries: Vec<CheckpointEntry>,
}

impl Checkpoint {
    pub fn from_store(store: &ParamStore, seed: u64) -> Self {
        let entries = store
            .iter()
            .filter(|(_, p)| p.trainable)
            .map(|(_, p)| CheckpointEntry {
                name: p.name.clone(),
                value: p.value.clone(),
            })
            .collect();
        Self { seed, entries }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for e in &self.entries {
            out.extend_from_slice(&(e.name.len() as u32).to_le_bytes());
            out.extend_from_slice(e.name.as_bytes());
            out.extend_from_slice(&2u32.to_le_bytes());
            for d in e.value.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for x in e.value.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let seed = r.u64()?;
        let count = r.u32()? as usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| Error::Format("parameter name is not UTF-8".into()))?;
            let ndim = r.u32()?;
            if ndim != 2 {
                return Err(Error::Format(format!(
                    "`{name}` has {ndim} dims, expected 2"
                )));
            }
            let rows = r.u64()? as usize;
            let cols = r.u64()? as usize;
            let data = r
                .take(rows * cols * 8)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            entries.push(CheckpointEntry {
                name,
                value: Tensor::new(rows, cols, data)?,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after checkpoint".into()));
        }
        Ok(Self { seed, entries })
    }

    /// Copies every entry into the same-named parameter of `store`.
    pub fn apply_to(&self, store: &mut ParamStore) -> Result<()> {
        for e in &self.entries {
            let id = store.find(&e.name).ok_or_else(|| {
                Error::Format(format!("checkpoint parameter `{}` not in model", e.name))
            })?;
            let p = store.get_mut(id);
            if p.value.shape() != e.value.shape() {
                return Err(Error::shape(
                    format!("checkpoint `{}`", e.name),
                    format!("{:?} vs model {:?}", e.value.shape(), p.value.shape()),
                ));
            }
            p.value = e.value.clone();
        }
        Ok(())
    }
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
            .ok_or_else(|| Error::Format("truncated checkpoint".into()))?;
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
}

pub fn write_checkpoint(store: &ParamStore, seed: u64, path: &Path) -> Result<()> {
    std::fs::write(path, Checkpoint::from_store(store, seed).to_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
