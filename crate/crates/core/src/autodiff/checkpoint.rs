//! Binary checkpoint container.
//!
//! All integers are little-endian.
//!
//! ```text
//! magic       8 bytes  "CPGVCKPT"
//! version     u32      currently 1
//! n_hyper     u32      then n_hyper pairs, sorted by key:
//!   key       u32 byte length + UTF-8 bytes
//!   value     u32 byte length + UTF-8 bytes
//! n_vocab     u32      then n_vocab entries in index order:
//!   token     u32 byte length + UTF-8 bytes
//! n_tensors   u32      then n_tensors entries, sorted by name:
//!   name      u32 byte length + UTF-8 bytes
//!   ndims     u32
//!   dims      ndims x u64
//!   values    product(dims) x f64, row-major
//! ```
//!
//! Readers reject unknown versions and trailing bytes.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use thiserror::Error;

use super::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CPGVCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub hyperparams: BTreeMap<String, String>,
    pub vocab: Vec<String>,
    pub tensors: BTreeMap<String, Tensor>,
}

fn put_u32(w: &mut impl Write, v: usize) -> Result<(), CheckpointError> {
    let v = u32::try_from(v).map_err(|_| CheckpointError::Corrupt(format!("length {v} exceeds u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_str(w: &mut impl Write, s: &str) -> Result<(), CheckpointError> {
    put_u32(w, s.len())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<u32, CheckpointError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64(r: &mut impl Read) -> Result<u64, CheckpointError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_str(r: &mut impl Read) -> Result<String, CheckpointError> {
    let n = get_u32(r)? as usize;
    let mut buf = Vec::new();
    r.take(n as u64).read_to_end(&mut buf)?;
    if buf.len() != n {
        return Err(CheckpointError::Corrupt("truncated string".into()));
    }
    String::from_utf8(buf).map_err(|e| CheckpointError::Corrupt(e.to_string()))
}

impl Checkpoint {
    pub fn write_to(&self, w: &mut impl Write) -> Result<(), CheckpointError> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        put_u32(w, self.hyperparams.len())?;
        for (k, v) in &self.hyperparams {
            put_str(w, k)?;
            put_str(w, v)?;
        }
        put_u32(w, self.vocab.len())?;
        for t in &self.vocab {
            put_str(w, t)?;
        }
        put_u32(w, self.tensors.len())?;
        for (name, t) in &self.tensors {
            put_str(w, name)?;
            put_u32(w, 2)?;
            for d in t.shape() {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            for v in t.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        out
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| CheckpointError::BadMagic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = get_u32(r)?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let mut ck = Checkpoint::default();
        for _ in 0..get_u32(r)? {
            let k = get_str(r)?;
            let v = get_str(r)?;
            ck.hyperparams.insert(k, v);
        }
        for _ in 0..get_u32(r)? {
            ck.vocab.push(get_str(r)?);
        }
        for _ in 0..get_u32(r)? {
            let name = get_str(r)?;
            let ndims = get_u32(r)? as usize;
            let dims: Vec<usize> = (0..ndims).map(|_| get_u64(r).map(|d| d as usize)).collect::<Result<_, _>>()?;
            let (rows, cols) = match dims.as_slice() {
                [] => (1, 1),
                [n] => (1, *n),
                [a, b] => (*a, *b),
                _ => return Err(CheckpointError::Corrupt(format!("{name}: {ndims}-d tensors are not supported"))),
            };
            let count = rows.checked_mul(cols).ok_or_else(|| CheckpointError::Corrupt(format!("{name}: size overflow")))?;
            let mut data = Vec::with_capacity(count.min(1 << 24));
            for _ in 0..count {
                let mut b = [0u8; 8];
                r.read_exact(&mut b)?;
                data.push(f64::from_le_bytes(b));
            }
            let t = Tensor::from_vec(rows, cols, data).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
            ck.tensors.insert(name, t);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(CheckpointError::Corrupt("trailing bytes".into()));
        }
        Ok(ck)
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self, CheckpointError> {
        Checkpoint::read_from(&mut bytes)
    }
}
