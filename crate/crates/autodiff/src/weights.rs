//! `NNW1` binary weight container.
//!
//! Layout (all integers little-endian):
//!
//! | field        | type                     |
//! |--------------|--------------------------|
//! | magic        | `b"NNW1"`                |
//! | architecture | `u32`                    |
//! | count        | `u32` parameter records  |
//!
//! followed by `count` records of `name_len: u32`, UTF-8 name,
//! `rank: u32`, `rank` dims as `u64`, then the raw `f64` values.

use crate::error::{AutodiffError, Result};
use crate::params::ParamStore;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"NNW1";
const MAX_RANK: usize = 8;

pub fn encode(arch_id: u32, store: &ParamStore) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + store.num_values() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&arch_id.to_le_bytes());
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for p in store.iter() {
        out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.extend_from_slice(&(p.value.shape().len() as u32).to_le_bytes());
        for d in p.value.shape() {
            out.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(AutodiffError::Format(format!("truncated {what} at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

/// Parses a container, returning the architecture id and parameters.
pub fn decode(bytes: &[u8]) -> Result<(u32, ParamStore)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(AutodiffError::Format("bad magic".into()));
    }
    let arch = r.u32("architecture id")?;
    let count = r.u32("parameter count")?;
    let mut store = ParamStore::new();
    for i in 0..count {
        let name_len = r.u32("name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| AutodiffError::Format(format!("parameter {i}: name is not UTF-8")))?
            .to_string();
        let rank = r.u32("rank")? as usize;
        if rank > MAX_RANK {
            return Err(AutodiffError::Format(format!("parameter `{name}`: rank {rank} too large")));
        }
        let mut shape = Vec::with_capacity(rank);
        let mut numel: usize = 1;
        for _ in 0..rank {
            let d = usize::try_from(r.u64("dimension")?)
                .map_err(|_| AutodiffError::Format(format!("parameter `{name}`: dimension overflow")))?;
            numel = numel
                .checked_mul(d)
                .ok_or_else(|| AutodiffError::Format(format!("parameter `{name}`: size overflow")))?;
            shape.push(d);
        }
        if numel > r.remaining() / 8 {
            return Err(AutodiffError::Format(format!("parameter `{name}`: truncated values")));
        }
        let raw = r.take(numel * 8, "values")?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        store.push(name, Tensor::new(shape, data)?);
    }
    if r.remaining() != 0 {
        return Err(AutodiffError::Format(format!("{} trailing bytes", r.remaining())));
    }
    Ok((arch, store))
}
