//! File formats: logit matrices, dense vector blocks, JSONL interchange and
//! TREC runs/qrels.

mod jsonl;
mod logits;
mod trec;

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use jsonl::{
    read_entries, read_jsonl, read_text_records, read_training_instances, write_entries,
    write_jsonl, EntryRecord, RepRecord, TextRecord, TrainingRecord,
};
pub use logits::{
    read_dense_file, read_hlgt, read_hlgt_file, read_manifest, write_dense_file, write_hlgt,
    write_hlgt_file, LogitManifest, ManifestItem, DENSE_HEADER_LEN, HLGT_MAGIC, HLGT_VERSION,
};
pub use trec::{format_run_line, parse_qrels, parse_run, read_qrels, read_run, write_run};

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Hex SHA-256 digest of a file's contents.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
