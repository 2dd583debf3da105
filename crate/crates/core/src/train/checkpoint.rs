//! Named-tensor checkpoint file.
//!
//! ```text
//! "AFKM" | version u32 | count u32 |
//!   count × ( name_len u32 | name utf-8 | rank u32 | dims u32×rank | f32×Πdims )
//! ```
//! All integers and floats little-endian.

use std::path::Path;

use crate::error::{Error, Result};
use crate::numkit::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"AFKM";
pub const CHECKPOINT_VERSION: u32 = 1;
const MAX_RANK: usize = 8;

pub fn encode_checkpoint(tensors: &[(String, Tensor)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
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
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::format("checkpoint", format!("truncated while reading {what} at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Vec<(String, Tensor)>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::format("checkpoint", "bad magic, expected AFKM"));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format("checkpoint", format!("unsupported version {version}")));
    }
    let count = r.u32("tensor count")? as usize;
    // Each entry needs at least 12 bytes; reject absurd counts before allocating.
    if count > r.remaining() / 12 {
        return Err(Error::format("checkpoint", format!("{count} tensors cannot fit in {} bytes", r.remaining())));
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let name_len = r.u32("name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| Error::format("checkpoint", format!("tensor {i} name is not UTF-8")))?
            .to_string();
        let rank = r.u32("rank")? as usize;
        if rank == 0 || rank > MAX_RANK {
            return Err(Error::format("checkpoint", format!("tensor {name} has rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        let mut elems: usize = 1;
        for _ in 0..rank {
            let d = r.u32("dimension")? as usize;
            if d == 0 {
                return Err(Error::format("checkpoint", format!("tensor {name} has a zero dimension")));
            }
            elems = elems
                .checked_mul(d)
                .ok_or_else(|| Error::format("checkpoint", format!("tensor {name} size overflows")))?;
            shape.push(d);
        }
        let nbytes = elems
            .checked_mul(4)
            .filter(|&b| b <= r.remaining())
            .ok_or_else(|| Error::format("checkpoint", format!("tensor {name} data truncated")))?;
        let data = r
            .take(nbytes, "data")?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        out.push((name, Tensor::new(shape, data)?));
    }
    if r.remaining() != 0 {
        return Err(Error::format("checkpoint", format!("{} trailing bytes", r.remaining())));
    }
    Ok(out)
}

pub fn save_checkpoint(path: &Path, tensors: &[(String, Tensor)]) -> Result<()> {
    std::fs::write(path, encode_checkpoint(tensors)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Vec<(String, Tensor)>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
