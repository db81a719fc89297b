//! Tensor files (`DTT` text, `DTTB` binary) and CSV matrices.
//!
//! Text numbers are written with 17 significant digits, which round-trips
//! every finite `f64`. Binary payloads are little-endian throughout.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use ontd_core::{DenseMatrix, DenseTensor};

use crate::error::{CliError, Result};

pub const TEXT_MAGIC: &str = "DTT";
pub const BINARY_MAGIC: &[u8; 4] = b"DTTB";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TensorFormat {
    #[default]
    Text,
    Binary,
}

impl TensorFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TensorFormat::Text => "dtt",
            TensorFormat::Binary => "dttb",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TensorFormat::Text => "text",
            TensorFormat::Binary => "binary",
        }
    }
}

impl FromStr for TensorFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "text" | "dtt" => Ok(TensorFormat::Text),
            "binary" | "dttb" => Ok(TensorFormat::Binary),
            other => Err(format!("unknown format {other:?} (expected text or binary)")),
        }
    }
}

/// `{:.16e}`: one digit before the point and 16 after.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn encode_text(t: &DenseTensor) -> String {
    let mut out = format!("{TEXT_MAGIC}\n{}\n", t.order());
    out.push_str(&t.dims().iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
    out.push('\n');
    let last = *t.dims().last().unwrap_or(&1);
    for row in t.values().chunks(last.max(1)) {
        out.push_str(&row.iter().map(|&v| fmt_real(v)).collect::<Vec<_>>().join(" "));
        out.push('\n');
    }
    out
}

pub fn encode_binary(t: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * t.order() + 8 * t.len());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(t.order() as u32).to_le_bytes());
    for &d in t.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in t.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn build(path: &Path, dims: Vec<usize>, values: Vec<f64>) -> Result<DenseTensor> {
    let expected: usize = dims.iter().product();
    if values.len() != expected {
        return Err(CliError::format(
            path,
            format!("dims {dims:?} need {expected} values, found {}", values.len()),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::format(path, "non-finite value"));
    }
    DenseTensor::new(dims, values).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn decode_text(path: &Path, text: &str) -> Result<DenseTensor> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(TEXT_MAGIC) {
        return Err(CliError::format(path, "missing DTT magic line"));
    }
    let order: usize = lines
        .next()
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| CliError::format(path, "line 2 must hold the order"))?;
    let dims: Vec<usize> = lines
        .next()
        .ok_or_else(|| CliError::format(path, "missing dims line"))?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| CliError::format(path, format!("bad dimension {s:?}"))))
        .collect::<Result<_>>()?;
    if dims.len() != order {
        return Err(CliError::format(path, format!("order {order} but {} dims", dims.len())));
    }
    let values = lines
        .flat_map(str::split_whitespace)
        .map(|s| s.parse::<f64>().map_err(|_| CliError::format(path, format!("bad value {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    build(path, dims, values)
}

pub fn decode_binary(path: &Path, bytes: &[u8]) -> Result<DenseTensor> {
    if bytes.get(..4) != Some(BINARY_MAGIC.as_slice()) {
        return Err(CliError::format(path, "missing DTTB magic"));
    }
    let word = |at: usize| -> Result<u32> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_le_bytes(b.try_into().expect("4-byte slice")))
            .ok_or_else(|| CliError::format(path, "truncated header"))
    };
    let order = word(4)? as usize;
    let dims = (0..order).map(|k| word(8 + 4 * k).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let payload = &bytes[8 + 4 * order..];
    if payload.len() % 8 != 0 {
        return Err(CliError::format(path, "payload is not a whole number of f64 values"));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    build(path, dims, values)
}

/// Reads either format, chosen by the leading magic bytes.
pub fn read_tensor(path: &Path) -> Result<(DenseTensor, TensorFormat)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.starts_with(BINARY_MAGIC) {
        return Ok((decode_binary(path, &bytes)?, TensorFormat::Binary));
    }
    let text = std::str::from_utf8(&bytes).map_err(|_| CliError::format(path, "neither DTT text nor DTTB"))?;
    Ok((decode_text(path, text)?, TensorFormat::Text))
}

pub fn write_tensor(t: &DenseTensor, path: &Path, format: TensorFormat) -> Result<()> {
    let bytes = match format {
        TensorFormat::Text => encode_text(t).into_bytes(),
        TensorFormat::Binary => encode_binary(t),
    };
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::format(path, e.to_string()))?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        // Unequal lengths surface here as a csv error.
        let record = record.map_err(|e| CliError::format(path, e.to_string()))?;
        cols.get_or_insert(record.len());
        for field in &record {
            let v: f64 = field.parse().map_err(|_| CliError::format(path, format!("bad value {field:?}")))?;
            if !v.is_finite() {
                return Err(CliError::format(path, "non-finite value"));
            }
            values.push(v);
        }
        rows += 1;
    }
    DenseMatrix::from_vec(rows, cols.unwrap_or(0), values).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn encode_matrix_csv(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        out.push_str(&m.row(i).iter().map(|&v| fmt_real(v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(m: &DenseMatrix, path: &Path) -> Result<()> {
    fs::write(path, encode_matrix_csv(m)).map_err(|e| CliError::io(path, e))
}
