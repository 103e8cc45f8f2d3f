//! `.ttnn` binary tensor files.
//!
//! Layout, all little-endian: the magic `TTNN`, a `u16` format version, the
//! three dimensions as `u32`, then `n1·n2·n3` `f64` values in slice-major,
//! column-major-within-slice order (the in-memory layout of [`Tensor3`]).

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use ttnn::Tensor3;

pub const MAGIC: &[u8; 4] = b"TTNN";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 3 * 4;

pub fn encode(t: &Tensor3) -> Result<Vec<u8>> {
    let (n1, n2, n3) = t.dims();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * t.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for n in [n1, n2, n3] {
        let n = u32::try_from(n).with_context(|| format!("dimension {n} does not fit in u32"))?;
        out.extend_from_slice(&n.to_le_bytes());
    }
    for v in t.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Tensor3> {
    ensure!(
        bytes.len() >= HEADER_LEN,
        "truncated header ({} bytes)",
        bytes.len()
    );
    if &bytes[..4] != MAGIC {
        bail!("bad magic {:?}, expected \"TTNN\"", &bytes[..4]);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    ensure!(version == VERSION, "unsupported format version {version}");
    let dim = |i: usize| {
        let o = 6 + 4 * i;
        u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize
    };
    let dims = (dim(0), dim(1), dim(2));
    let count = dims
        .0
        .checked_mul(dims.1)
        .and_then(|c| c.checked_mul(dims.2))
        .context("dimensions overflow")?;
    let payload = &bytes[HEADER_LEN..];
    ensure!(
        payload.len() == 8 * count,
        "payload is {} bytes, dims {dims:?} need {}",
        payload.len(),
        8 * count
    );
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Tensor3::new(dims, data)?)
}

pub fn save(path: &Path, t: &Tensor3) -> Result<()> {
    fs::write(path, encode(t)?).with_context(|| format!("writing {}", path.display()))
}

pub fn load(path: &Path) -> Result<Tensor3> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode(&bytes).with_context(|| format!("decoding {}", path.display()))
}
