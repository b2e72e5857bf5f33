//! Flat binary model format.
//!
//! Layout, all little-endian:
//!
//! ```text
//! bytes 0..4    magic  b"BMMF"
//! bytes 4..8    format version (u32) = 1
//! bytes 8..12   K (u32)
//! bytes 12..16  D (u32)
//! then          K f64 mixing weights
//! then          K*D f64 Bernoulli parameters, row-major
//! ```
//!
//! Round trips are bit-exact: bytes are written with `f64::to_le_bytes` and
//! read back with `f64::from_le_bytes`.

use std::path::Path;

use crate::error::{Error, Result};

use super::BernoulliMixture;

const MAGIC: &[u8; 4] = b"BMMF";
const VERSION: u32 = 1;

pub fn model_to_bytes(model: &BernoulliMixture) -> Vec<u8> {
    let (k, d) = (model.k(), model.d());
    let mut out = Vec::with_capacity(16 + 8 * (k + k * d));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(k as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for &w in model.pi() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    for &v in model.p() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<BernoulliMixture> {
    if bytes.len() < 16 {
        return Err(Error::BadModelFile("header too short".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::BadModelFile("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::BadModelFile(format!(
            "unsupported version {version}"
        )));
    }
    let k = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let needed = 16 + 8 * (k + k * d);
    if bytes.len() != needed {
        return Err(Error::BadModelFile(format!(
            "expected {needed} bytes for K={k}, D={d}, found {}",
            bytes.len()
        )));
    }
    let mut pi = Vec::with_capacity(k);
    let mut off = 16;
    for _ in 0..k {
        pi.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
        off += 8;
    }
    let mut p = Vec::with_capacity(k * d);
    for _ in 0..k * d {
        p.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
        off += 8;
    }
    Ok(BernoulliMixture::from_parts_unchecked(pi, p, d))
}

pub fn write_model(model: &BernoulliMixture, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_bytes(model))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<BernoulliMixture> {
    model_from_bytes(&std::fs::read(path)?)
}
