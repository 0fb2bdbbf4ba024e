//! Matrix files (binary `ESMX` and CSV) and atomic output writes.
//!
//! `ESMX` layout: the 4-byte magic `ESMX`, a little-endian `u32` format
//! version, little-endian `u64` rows and cols, then `rows·cols` little-endian
//! `f64` values in row-major order. Nothing may follow the payload.

use std::fs;
use std::io::Write;
use std::path::Path;

use faer::Mat;

use crate::error::{Error, Result};

pub const MATRIX_MAGIC: &[u8; 4] = b"ESMX";
pub const MATRIX_FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

/// Serializes a matrix to `ESMX` bytes.
pub fn encode_matrix(m: &Mat<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.nrows() * m.ncols() * 8);
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&MATRIX_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    out
}

/// Parses `ESMX` bytes; the header is checked before the payload is touched.
pub fn decode_matrix(bytes: &[u8]) -> Result<Mat<f64>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Corrupt(format!("matrix file is {} bytes, shorter than its header", bytes.len())));
    }
    if &bytes[..4] != MATRIX_MAGIC {
        return Err(Error::Corrupt("bad magic; not an ESMX matrix file".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4-byte slice"));
    if version != MATRIX_FORMAT_VERSION {
        return Err(Error::VersionMismatch { expected: MATRIX_FORMAT_VERSION, found: version });
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().expect("8-byte slice"));
    let cols = u64::from_le_bytes(bytes[16..24].try_into().expect("8-byte slice"));
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Corrupt(format!("matrix shape {rows}x{cols} overflows")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != expected {
        return Err(Error::Corrupt(format!(
            "payload is {} bytes, expected {expected} for a {rows}x{cols} matrix",
            payload.len()
        )));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let value = |i: usize, j: usize| {
        let at = (i * cols + j) * 8;
        f64::from_le_bytes(payload[at..at + 8].try_into().expect("8-byte slice"))
    };
    Ok(Mat::from_fn(rows, cols, value))
}

pub fn read_matrix_file(path: &Path) -> Result<Mat<f64>> {
    decode_matrix(&fs::read(path)?)
}

pub fn write_matrix_file(path: &Path, m: &Mat<f64>) -> Result<()> {
    write_atomic(path, &encode_matrix(m))
}

/// Reads a CSV matrix whose first line is a header.
pub fn read_csv_matrix(path: &Path) -> Result<Mat<f64>> {
    parse_csv_matrix(fs::File::open(path)?)
}

pub fn parse_csv_matrix(reader: impl std::io::Read) -> Result<Mat<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let width = rdr.headers().map_err(csv_error)?.len();
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::Corrupt(format!("row {}: '{field}' is not a number", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != width {
            return Err(Error::DimensionMismatch { expected: width, found: row.len() });
        }
        rows.push(row);
    }
    Ok(Mat::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

/// CSV with a `c0,c1,…` header; values use the shortest round-trip form.
pub fn encode_csv_matrix(m: &Mat<f64>) -> Vec<u8> {
    let mut out = String::new();
    let header: Vec<String> = (0..m.ncols()).map(|j| format!("c{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Corrupt(format!("csv: {e}"))
}

/// Reads `ESMX` or CSV; the format is chosen by content (magic bytes).
pub fn read_matrix_any(path: &Path) -> Result<Mat<f64>> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(MATRIX_MAGIC) {
        decode_matrix(&bytes)
    } else {
        parse_csv_matrix(bytes.as_slice())
    }
}

/// Writes `ESMX` unless the path ends in `.csv`.
pub fn write_matrix_any(path: &Path, m: &Mat<f64>) -> Result<()> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        write_atomic(path, &encode_csv_matrix(m))
    } else {
        write_matrix_file(path, m)
    }
}

/// Writes to a sibling temporary file, syncs it, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Domain(format!("'{}' has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}
