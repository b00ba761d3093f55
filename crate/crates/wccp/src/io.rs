//! On-disk formats for measurement sets.
//!
//! Two interchangeable encodings produce identical [`MeasurementSet`]s:
//!
//! **JSON** (self-describing, diffable):
//!
//! ```json
//! {"version": 1, "d": 2, "n": 1, "mode": "dense",
//!  "y": [0.5], "Z": [1.0, 0.0, 0.0, 1.0]}
//! ```
//!
//! with `"Z"` holding `n * d * d` row-major entries; rank-one files use
//! `"mode": "rank1"` and `"factors"` with `n * d` entries instead of `"Z"`.
//!
//! **Binary** (compact, for large dense sets): a 16-byte magic header
//! [`BINARY_MAGIC`], then little-endian `version: u32`, `mode: u32` (0 dense,
//! 1 rank-one), `d: u64`, `n: u64`, the `n` responses as `f64`, and the matrix
//! entries (resp. factors) as `f64`, all little-endian.
//!
//! [`load_measurements`] sniffs the header and accepts either encoding.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MeasurementSet, ModelError, Storage};

/// Identifies the binary measurement format, version-agnostic.
pub const BINARY_MAGIC: [u8; 16] = *b"QUADMEAS-BINARY\0";
/// Current format version for both encodings.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed JSON data file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("malformed data file: {0}")]
    Format(String),
}

#[derive(Serialize, Deserialize)]
struct DataFile {
    version: u32,
    d: usize,
    n: usize,
    mode: String,
    y: Vec<f64>,
    #[serde(rename = "Z", default, skip_serializing_if = "Option::is_none")]
    z: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factors: Option<Vec<f64>>,
}

/// Loads a measurement file, auto-detecting binary vs JSON by the magic bytes.
pub fn load_measurements(path: impl AsRef<Path>) -> Result<MeasurementSet, DataError> {
    let mut file = BufReader::new(File::open(path)?);
    let mut head = [0_u8; 16];
    let got = read_up_to(&mut file, &mut head)?;
    if got == 16 && head == BINARY_MAGIC {
        return read_binary_body(&mut file);
    }
    let mut bytes = head[..got].to_vec();
    file.read_to_end(&mut bytes)?;
    parse_json(&bytes)
}

/// Parses the JSON encoding from raw bytes.
pub fn parse_json(bytes: &[u8]) -> Result<MeasurementSet, DataError> {
    let parsed: DataFile = serde_json::from_slice(bytes)?;
    if parsed.version != FORMAT_VERSION {
        return Err(DataError::Format(format!(
            "unsupported data format version {}",
            parsed.version
        )));
    }
    if parsed.y.len() != parsed.n {
        return Err(DataError::Format(format!(
            "declared n = {} but y has {} entries",
            parsed.n,
            parsed.y.len()
        )));
    }
    match (parsed.mode.as_str(), parsed.z, parsed.factors) {
        ("dense", Some(z), None) => Ok(MeasurementSet::from_dense(parsed.d, parsed.y, z)?),
        ("rank1", None, Some(f)) => Ok(MeasurementSet::from_rank_one(parsed.d, parsed.y, f)?),
        ("dense", _, _) => Err(DataError::Format(
            "mode 'dense' requires field 'Z' and forbids 'factors'".into(),
        )),
        ("rank1", _, _) => Err(DataError::Format(
            "mode 'rank1' requires field 'factors' and forbids 'Z'".into(),
        )),
        (other, _, _) => Err(DataError::Format(format!(
            "unknown mode '{other}' (expected 'dense' or 'rank1')"
        ))),
    }
}

/// Writes the JSON encoding.
pub fn save_measurements_json(
    data: &MeasurementSet,
    path: impl AsRef<Path>,
) -> Result<(), DataError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_json(data, &mut w)?;
    Ok(w.flush()?)
}

pub fn write_json(data: &MeasurementSet, w: impl Write) -> Result<(), DataError> {
    let (mode, z, factors) = match data.storage() {
        Storage::Dense(e) => ("dense", Some(e.clone()), None),
        Storage::RankOne(f) => ("rank1", None, Some(f.clone())),
    };
    let file = DataFile {
        version: FORMAT_VERSION,
        d: data.d(),
        n: data.n(),
        mode: mode.into(),
        y: data.y().to_vec(),
        z,
        factors,
    };
    serde_json::to_writer(w, &file)?;
    Ok(())
}

/// Writes the binary encoding.
pub fn save_measurements_binary(
    data: &MeasurementSet,
    path: impl AsRef<Path>,
) -> Result<(), DataError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_binary(data, &mut w)?;
    Ok(w.flush()?)
}

pub fn write_binary(data: &MeasurementSet, mut w: impl Write) -> Result<(), DataError> {
    w.write_all(&BINARY_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    let (mode, entries): (u32, &[f64]) = match data.storage() {
        Storage::Dense(e) => (0, e),
        Storage::RankOne(f) => (1, f),
    };
    w.write_all(&mode.to_le_bytes())?;
    w.write_all(&(data.d() as u64).to_le_bytes())?;
    w.write_all(&(data.n() as u64).to_le_bytes())?;
    for v in data.y() {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in entries {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_binary_body(r: &mut impl Read) -> Result<MeasurementSet, DataError> {
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(DataError::Format(format!(
            "unsupported binary format version {version}"
        )));
    }
    let mode = read_u32(r)?;
    let d = read_u64(r)? as usize;
    let n = read_u64(r)? as usize;
    // Cheap sanity bound before allocating: refuse absurd sizes.
    let per_sample = match mode {
        0 => d.checked_mul(d),
        1 => Some(d),
        m => {
            return Err(DataError::Format(format!(
                "unknown storage mode {m} (expected 0 = dense, 1 = rank1)"
            )))
        }
    }
    .and_then(|p| p.checked_mul(n))
    .ok_or_else(|| DataError::Format("declared dimensions overflow".into()))?;

    let y = read_f64s(r, n)?;
    let entries = read_f64s(r, per_sample)?;
    let mut probe = [0_u8; 1];
    if read_up_to(r, &mut probe)? != 0 {
        return Err(DataError::Format("trailing bytes after payload".into()));
    }
    let set = if mode == 0 {
        MeasurementSet::from_dense(d, y, entries)?
    } else {
        MeasurementSet::from_rank_one(d, y, entries)?
    };
    Ok(set)
}

/// Loads a plain JSON array of reals (used for warm-start vectors).
pub fn load_vector(path: impl AsRef<Path>) -> Result<Vec<f64>, DataError> {
    let bytes = std::fs::read(path)?;
    let v: Vec<f64> = serde_json::from_slice(&bytes)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(DataError::Format("vector contains a non-finite value".into()));
    }
    Ok(v)
}

/// Saves a plain JSON array of reals.
pub fn save_vector(values: &[f64], path: impl AsRef<Path>) -> Result<(), DataError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, values)?;
    Ok(w.flush()?)
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> Result<usize, DataError> {
    let mut filled = 0;
    while filled < buf.len() {
        let got = r.read(&mut buf[filled..])?;
        if got == 0 {
            break;
        }
        filled += got;
    }
    Ok(filled)
}

fn read_exact_or_format(r: &mut impl Read, buf: &mut [u8]) -> Result<(), DataError> {
    r.read_exact(buf)
        .map_err(|_| DataError::Format("unexpected end of file".into()))
}

fn read_u32(r: &mut impl Read) -> Result<u32, DataError> {
    let mut b = [0_u8; 4];
    read_exact_or_format(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64, DataError> {
    let mut b = [0_u8; 8];
    read_exact_or_format(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>, DataError> {
    let mut out = Vec::with_capacity(count);
    let mut chunk = [0_u8; 8];
    for _ in 0..count {
        read_exact_or_format(r, &mut chunk)?;
        out.push(f64::from_le_bytes(chunk));
    }
    Ok(out)
}
