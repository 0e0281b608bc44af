//! Global-model checkpoints.
//!
//! Little-endian record: magic `FSCK`, `u32` round, `u32` group count, then
//! per group `u32` offset, `u32` length, `u32` bytes per element, then `u64`
//! value count and the values as `f64`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::params::{Group, GroupLayout, ParamVector};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FSCK";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub round: u32,
    pub params: ParamVector,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let layout = self.params.layout();
        let mut out = Vec::with_capacity(24 + 12 * 4 + 8 * self.params.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&self.round.to_le_bytes());
        out.extend_from_slice(&4u32.to_le_bytes());
        for g in layout.groups() {
            out.extend_from_slice(&(g.offset as u32).to_le_bytes());
            out.extend_from_slice(&(g.length as u32).to_le_bytes());
            out.extend_from_slice(&g.bytes_per_element.to_le_bytes());
        }
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for v in self.params.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut cur = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cur.len() < n {
                return Err(bad("truncated"));
            }
            let (head, rest) = cur.split_at(n);
            cur = rest;
            Ok(head)
        };
        if take(4)? != CHECKPOINT_MAGIC {
            return Err(bad("missing FSCK magic"));
        }
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes"));
        let round = u32_at(take(4)?);
        if u32_at(take(4)?) != 4 {
            return Err(bad("expected four parameter groups"));
        }
        let mut lengths = [0usize; 4];
        let mut bpe = 0;
        let mut expected_offset = 0;
        for len in &mut lengths {
            let offset = u32_at(take(4)?) as usize;
            *len = u32_at(take(4)?) as usize;
            bpe = u32_at(take(4)?);
            if offset != expected_offset {
                return Err(bad("groups are not contiguous"));
            }
            expected_offset += *len;
        }
        let count = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize;
        if count != expected_offset {
            return Err(bad("value count disagrees with layout"));
        }
        let raw = take(count * 8)?;
        if !cur.is_empty() {
            return Err(bad("trailing bytes"));
        }
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let layout = Arc::new(GroupLayout::from_lengths(lengths, bpe));
        let params = ParamVector::new(values, layout).map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(Checkpoint { round, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Re-attaches the parameters to `layout` after checking it matches.
    pub fn params_for(&self, layout: &Arc<GroupLayout>) -> Result<ParamVector> {
        let ours = self.params.layout();
        let same = Group::ALL
            .iter()
            .all(|&g| ours.group(g).length == layout.group(g).length);
        if !same {
            return Err(Error::Checkpoint(
                "checkpoint layout does not match the configured model".into(),
            ));
        }
        ParamVector::new(self.params.values().to_vec(), layout.clone())
    }
}
