//! Matrix file formats: a binary container and plain CSV.
//!
//! The binary layout is `MPDN` magic, a little-endian u32 format version,
//! row and column counts as little-endian u64, a layout byte (0 =
//! row-major), and the payload as little-endian f64 values. Binary
//! round-trips are bit-identical. CSV files are plain rows of
//! comma-separated values written with 17 significant digits, which is
//! enough for the decimal text to round-trip every f64 exactly.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::{CliError, CliResult};

const MAGIC: &[u8; 4] = b"MPDN";
const FORMAT_VERSION: u32 = 1;
const LAYOUT_ROW_MAJOR: u8 = 0;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 1;

/// Reads a matrix file, accepting either format. Content is sniffed by
/// the magic bytes so extensions do not matter.
pub fn load_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    if bytes.starts_with(MAGIC) {
        parse_binary(&bytes).map_err(|msg| {
            CliError::Data(format!("malformed matrix file {}: {msg}", path.display()))
        })
    } else {
        let text = std::str::from_utf8(&bytes).map_err(|_| {
            CliError::Data(format!(
                "{} is neither a binary matrix nor UTF-8 CSV",
                path.display()
            ))
        })?;
        parse_csv(text).map_err(|msg| {
            CliError::Data(format!("malformed CSV matrix {}: {msg}", path.display()))
        })
    }
}

fn parse_binary(bytes: &[u8]) -> Result<DMatrix<f64>, String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!(
            "header truncated: {} bytes, need {HEADER_LEN}",
            bytes.len()
        ));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let m = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let n = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let layout = bytes[24];
    if layout != LAYOUT_ROW_MAJOR {
        return Err(format!("unknown layout byte {layout}"));
    }
    let count = m
        .checked_mul(n)
        .filter(|&c| c <= (usize::MAX as u64) / 8)
        .ok_or_else(|| format!("dimensions {m} x {n} overflow the payload size"))?;
    let expected = HEADER_LEN + (count as usize) * 8;
    if bytes.len() != expected {
        return Err(format!(
            "payload is {} bytes, header implies {expected}",
            bytes.len()
        ));
    }
    let (m, n) = (m as usize, n as usize);
    let payload = &bytes[HEADER_LEN..];
    let mut data = DMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let off = (i * n + j) * 8;
            data[(i, j)] = f64::from_le_bytes(payload[off..off + 8].try_into().unwrap());
        }
    }
    Ok(data)
}

fn parse_csv(text: &str) -> Result<DMatrix<f64>, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, String> = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("line {}: bad number {cell:?}", lineno + 1))
            })
            .collect();
        let row = row?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(format!(
                    "line {}: {} values, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("no rows".to_string());
    }
    let (m, n) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
}

/// Serializes to the binary container.
pub fn to_binary(matrix: &DMatrix<f64>) -> Vec<u8> {
    let (m, n) = matrix.shape();
    let mut bytes = Vec::with_capacity(HEADER_LEN + m * n * 8);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(m as u64).to_le_bytes());
    bytes.extend_from_slice(&(n as u64).to_le_bytes());
    bytes.push(LAYOUT_ROW_MAJOR);
    for i in 0..m {
        for j in 0..n {
            bytes.extend_from_slice(&matrix[(i, j)].to_le_bytes());
        }
    }
    bytes
}

pub fn store_binary(path: &Path, matrix: &DMatrix<f64>) -> CliResult<()> {
    fs::write(path, to_binary(matrix))
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Serializes to CSV text at full precision.
pub fn to_csv(matrix: &DMatrix<f64>) -> String {
    let (m, n) = matrix.shape();
    let mut out = String::new();
    for i in 0..m {
        for j in 0..n {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.16e}", matrix[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn store_csv(path: &Path, matrix: &DMatrix<f64>) -> CliResult<()> {
    fs::write(path, to_csv(matrix))
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
