//! Binary matrix container with a JSON sidecar.
//!
//! Layout of the binary file: the 8-byte magic `FOCKMAT1`, then `rows` and
//! `cols` as little-endian `u64`, then `rows * cols` complex entries in
//! column-major order, each stored as two little-endian `f64` (re, im).

use std::fs;
use std::io::Read;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{CMatrix, FockError, TruncatedRep, TruncationSpec};

const MAGIC: &[u8; 8] = b"FOCKMAT1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub format: String,
    pub rows: usize,
    pub cols: usize,
    pub spec: TruncationSpec,
    pub mode_count: usize,
    pub source: String,
    pub hermiticity_defect: f64,
}

/// Writes `rep` to `bin_path` and its metadata to `json_path`.
pub fn write_matrix(rep: &TruncatedRep, bin_path: &Path, json_path: &Path) -> Result<(), FockError> {
    let m = rep.matrix();
    let mut bytes = Vec::with_capacity(24 + 16 * m.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    // nalgebra storage is column-major already.
    for c in m.iter() {
        bytes.extend_from_slice(&c.re.to_le_bytes());
        bytes.extend_from_slice(&c.im.to_le_bytes());
    }
    crate::io::write_atomic(bin_path, &bytes)?;

    let sidecar = MatrixSidecar {
        format: String::from_utf8_lossy(MAGIC).into_owned(),
        rows: m.nrows(),
        cols: m.ncols(),
        spec: rep.spec().clone(),
        mode_count: rep.source().mode_count(),
        source: rep.source().to_string(),
        hermiticity_defect: rep.hermiticity_defect(),
    };
    crate::io::write_atomic(json_path, serde_json::to_string_pretty(&sidecar)?.as_bytes())?;
    Ok(())
}

/// Reads a matrix written by [`write_matrix`].
pub fn read_matrix(bin_path: &Path) -> Result<CMatrix, FockError> {
    let mut bytes = Vec::new();
    fs::File::open(bin_path)?.read_to_end(&mut bytes)?;
    let bad = |why: &str| FockError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, why.to_string()));
    if bytes.len() < 24 || &bytes[..8] != MAGIC {
        return Err(bad("missing FOCKMAT1 header"));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let (rows, cols) = (word(8) as usize, word(16) as usize);
    if bytes.len() != 24 + 16 * rows * cols {
        return Err(bad("payload length does not match header"));
    }
    let float = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let data: Vec<C64> = (0..rows * cols).map(|k| C64::new(float(24 + 16 * k), float(32 + 16 * k))).collect();
    Ok(CMatrix::from_vec(rows, cols, data))
}
