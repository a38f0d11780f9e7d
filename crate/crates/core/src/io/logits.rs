use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::ByteReader;
use crate::io::atomic_write;
use crate::repr::{DenseRep, LogitMatrix};

pub const HLGT_MAGIC: &[u8; 4] = b"HLGT";
pub const HLGT_VERSION: u32 = 1;
/// `u32 count` followed by `u32 width`.
pub const DENSE_HEADER_LEN: usize = 8;

/// Appends one matrix record: magic, version, rows, cols, row-major `f32`s.
pub fn write_hlgt(out: &mut Vec<u8>, m: &LogitMatrix) {
    out.extend_from_slice(HLGT_MAGIC);
    out.extend_from_slice(&HLGT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn write_hlgt_file(path: &Path, matrices: &[LogitMatrix]) -> Result<()> {
    let mut out = Vec::new();
    for m in matrices {
        write_hlgt(&mut out, m);
    }
    atomic_write(path, &out)
}

/// Reads a stream of concatenated matrix records. An empty stream holds zero
/// matrices.
pub fn read_hlgt(bytes: &[u8]) -> Result<Vec<LogitMatrix>> {
    let mut r = ByteReader::new(bytes, "logit record");
    let mut out = Vec::new();
    while !r.is_done() {
        let n = out.len();
        if r.take(4)? != HLGT_MAGIC {
            return Err(Error::Format(format!("logit record {n}: bad magic")));
        }
        let version = r.u32()?;
        if version != HLGT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: HLGT_VERSION,
            });
        }
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let count = rows
            .checked_mul(cols)
            .filter(|c| c.checked_mul(4).is_some_and(|b| b <= r.remaining()))
            .ok_or_else(|| {
                Error::Truncated(format!("logit record {n} declares {rows}x{cols} values"))
            })?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(r.f32()?);
        }
        let m = LogitMatrix::new(rows, cols, values).map_err(|e| match e {
            Error::NonFinite { row, col, value } => Error::Invalid(format!(
                "logit record {n}: non-finite value {value} at row {row}, column {col}"
            )),
            other => other,
        })?;
        out.push(m);
    }
    Ok(out)
}

pub fn read_hlgt_file(path: &Path) -> Result<Vec<LogitMatrix>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_hlgt(&bytes)
}

/// Writes `u32 count | u32 width | count*width f32`, little-endian.
pub fn write_dense_file(path: &Path, width: usize, vectors: &[DenseRep]) -> Result<()> {
    if let Some(v) = vectors.iter().find(|v| v.len() != width) {
        return Err(Error::Dimension {
            what: "dense vector".into(),
            expected: width,
            actual: v.len(),
        });
    }
    let mut out = Vec::with_capacity(DENSE_HEADER_LEN + 4 * width * vectors.len());
    out.extend_from_slice(&(vectors.len() as u32).to_le_bytes());
    out.extend_from_slice(&(width as u32).to_le_bytes());
    for v in vectors {
        for x in v.as_slice() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    atomic_write(path, &out)
}

pub fn read_dense_file(path: &Path) -> Result<Vec<DenseRep>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = ByteReader::new(&bytes, "dense file");
    let count = r.u32()? as usize;
    let width = r.u32()? as usize;
    let needed = count
        .checked_mul(width)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("dense header overflows".into()))?;
    if needed != r.remaining() {
        let err = format!(
            "dense file declares {count}x{width} values but carries {} bytes",
            r.remaining()
        );
        return Err(if needed > r.remaining() {
            Error::Truncated(err)
        } else {
            Error::Format(err)
        });
    }
    (0..count)
        .map(|_| {
            let v = (0..width).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
            DenseRep::new(v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub id: String,
    #[serde(default = "default_source")]
    pub source: String,
    #[serde(default)]
    pub surface_tokens: Vec<String>,
}

fn default_source() -> String {
    "other".into()
}

/// Sidecar describing each matrix of a logit file, in file order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LogitManifest {
    pub items: Vec<ManifestItem>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestShape {
    Object(LogitManifest),
    List(Vec<ManifestItem>),
}

/// Accepts either `{"items": [...]}` or a bare array of items.
pub fn read_manifest(path: &Path) -> Result<LogitManifest> {
    let text = super::read_to_string(path)?;
    let shape: ManifestShape = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    Ok(match shape {
        ManifestShape::Object(m) => m,
        ManifestShape::List(items) => LogitManifest {
            items,
            warnings: Vec::new(),
        },
    })
}
