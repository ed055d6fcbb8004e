//! CFW1 container.
//!
//! Little-endian throughout:
//!
//! ```text
//! "CFW1" | u32 version | u32 tensor_count
//! per tensor: u16 name_len | name (utf-8) | u8 dtype (0=f32, 1=f16) | u8 rank
//!             | u32 dims[rank] | raw data (prod(dims) * dtype size bytes)
//! u64 fingerprint (FNV-1a 64 over all per-tensor records)
//! ```

use std::hash::Hasher;

use fnv::FnvHasher;

use super::{DType, WeightStore, WeightTensor};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CFW1";
pub const FORMAT_VERSION: u32 = 1;

pub(crate) fn encode_entry(buf: &mut Vec<u8>, name: &str, t: &WeightTensor) {
    buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
    buf.extend_from_slice(name.as_bytes());
    buf.push(t.dtype.code());
    buf.push(t.dims.len() as u8);
    for &d in &t.dims {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    match t.dtype {
        DType::F32 => {
            for v in &t.data {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        DType::F16 => {
            for v in &t.data {
                buf.extend_from_slice(&half::f16::from_f32(*v).to_le_bytes());
            }
        }
    }
}

/// Serialise every tensor at `dtype`. Output is canonical: equal stores
/// always produce identical bytes.
pub fn save_weights(store: &WeightStore, dtype: DType) -> Vec<u8> {
    let store = store.converted(dtype);
    let mut out = Vec::with_capacity(16 + store.num_scalars() * dtype.size());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    let body_start = out.len();
    for (name, t) in store.iter() {
        encode_entry(&mut out, name, t);
    }
    let mut hasher = FnvHasher::default();
    hasher.write(&out[body_start..]);
    out.extend_from_slice(&hasher.finish().to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated(format!(
                "need {n} bytes for {what} at offset {}, {} left",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn load_weights(bytes: &[u8]) -> Result<WeightStore> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::BadMagic(format!(
            "expected {:?}, found {:?}",
            String::from_utf8_lossy(MAGIC),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let count = r.u32("tensor count")?;
    let body_start = r.pos;
    let mut store = WeightStore::new();
    for i in 0..count {
        let name_len = r.u16("name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| Error::Corrupt(format!("tensor {i}: name is not utf-8")))?
            .to_string();
        let code = r.u8("dtype")?;
        let dtype = DType::from_code(code)
            .ok_or_else(|| Error::Corrupt(format!("`{name}`: unknown dtype code {code}")))?;
        let rank = r.u8("rank")? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.u32("dims")? as usize);
        }
        let numel = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Corrupt(format!("`{name}`: dims {dims:?} overflow")))?;
        let nbytes = numel
            .checked_mul(dtype.size())
            .ok_or_else(|| Error::Corrupt(format!("`{name}`: byte length overflows")))?;
        let raw = r.take(nbytes, &format!("data of `{name}`"))?;
        let data: Vec<f32> = match dtype {
            DType::F32 => raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect(),
            DType::F16 => raw
                .chunks_exact(2)
                .map(|b| half::f16::from_le_bytes(b.try_into().unwrap()).to_f32())
                .collect(),
        };
        store.insert(name, WeightTensor { dims, data, dtype })?;
    }
    let body_end = r.pos;
    let digest = u64::from_le_bytes(r.take(8, "fingerprint")?.try_into().unwrap());
    if r.pos != bytes.len() {
        return Err(Error::Corrupt(format!(
            "{} unexpected bytes after the fingerprint (tensor byte lengths disagree with their shapes)",
            bytes.len() - r.pos
        )));
    }
    let mut hasher = FnvHasher::default();
    hasher.write(&bytes[body_start..body_end]);
    if hasher.finish() != digest {
        return Err(Error::Corrupt(format!(
            "fingerprint mismatch: file records {digest:016x}, content hashes to {:016x}",
            hasher.finish()
        )));
    }
    Ok(store)
}
