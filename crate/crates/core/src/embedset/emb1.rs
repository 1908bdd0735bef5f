//! EMB1 binary matrix format.
//!
//! Layout (all little-endian):
//!
//! | offset | size      | content                         |
//! |--------|-----------|---------------------------------|
//! | 0      | 4         | ASCII magic `EMB1`              |
//! | 4      | 4         | `u32` row count `n`             |
//! | 8      | 4         | `u32` dimension `d` (`d >= 1`)  |
//! | 12     | `4*n*d`   | `f32` values, row-major         |
//!
//! The payload length must equal `4*n*d` exactly; trailing or missing bytes
//! are rejected.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EMB1";
pub const HEADER_LEN: usize = 12;

/// Encodes a matrix as EMB1 bytes. Values are narrowed to `f32`.
pub fn encode(matrix: ArrayView2<'_, f64>) -> Vec<u8> {
    let (n, d) = matrix.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * n * d);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for v in matrix.iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

/// Reads only the `(n, d)` header of an EMB1 byte buffer, validating the
/// payload length.
pub fn decode_header(bytes: &[u8], path: &Path) -> Result<(usize, usize)> {
    let malformed = |reason: String| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(malformed(format!(
            "file has {} bytes, header needs {HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(malformed(format!("bad magic {:?}", &bytes[0..4])));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if d == 0 {
        return Err(malformed("dimension is zero".into()));
    }
    let expected = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| malformed(format!("n={n}, d={d} overflows")))?;
    let payload = bytes.len() - HEADER_LEN;
    if payload != expected {
        return Err(malformed(format!(
            "n={n}, d={d} declares {expected} payload bytes, found {payload}"
        )));
    }
    Ok((n, d))
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<Array2<f64>> {
    let (n, d) = decode_header(bytes, path)?;
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(Array2::from_shape_vec((n, d), values).expect("length checked against header"))
}

pub fn write(path: &Path, matrix: ArrayView2<'_, f64>) -> Result<()> {
    fs::write(path, encode(matrix)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Array2<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}
