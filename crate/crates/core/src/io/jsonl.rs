use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::HybridEntry;
use crate::io::atomic_write;
use crate::losses::TrainingInstance;
use crate::repr::{DenseRep, SparseRep};
use crate::scoring::SourceTag;

/// One line of the representation interchange file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub id: String,
    #[serde(default = "other")]
    pub source: String,
    pub dense: Vec<f32>,
    #[serde(default)]
    pub sparse: BTreeMap<String, f32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    /// Sparsity limit the representation was produced with, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

fn other() -> String {
    "other".into()
}

fn parse_sparse(map: &BTreeMap<String, f32>, k: Option<usize>) -> Result<SparseRep> {
    let pairs = map
        .iter()
        .map(|(key, &w)| {
            key.trim()
                .parse::<u32>()
                .map(|id| (id, w))
                .map_err(|_| Error::Invalid(format!("sparse key `{key}` is not a token id")))
        })
        .collect::<Result<Vec<_>>>()?;
    match k {
        Some(k) => SparseRep::from_pairs(pairs, k),
        None => SparseRep::from_unbounded(pairs),
    }
}

fn sparse_to_map(rep: &SparseRep) -> BTreeMap<String, f32> {
    rep.entries().iter().map(|&(id, w)| (id.to_string(), w)).collect()
}

impl TryFrom<EntryRecord> for HybridEntry {
    type Error = Error;

    fn try_from(r: EntryRecord) -> Result<Self> {
        let sparse = parse_sparse(&r.sparse, r.k)
            .map_err(|e| Error::Invalid(format!("entry `{}`: {e}", r.id)))?;
        let dense =
            DenseRep::new(r.dense).map_err(|e| Error::Invalid(format!("entry `{}`: {e}", r.id)))?;
        Ok(HybridEntry {
            id: r.id,
            source: SourceTag::parse_lenient(&r.source),
            dense,
            sparse,
            surface_tokens: r.tokens,
        })
    }
}

impl From<&HybridEntry> for EntryRecord {
    fn from(e: &HybridEntry) -> Self {
        EntryRecord {
            id: e.id.clone(),
            source: e.source.to_string(),
            dense: e.dense.as_slice().to_vec(),
            sparse: sparse_to_map(&e.sparse),
            tokens: e.surface_tokens.clone(),
            k: Some(e.sparse.k_limit()),
        }
    }
}

/// A dense-plus-sparse representation without identity, as used in training
/// batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub dense: Vec<f32>,
    #[serde(default)]
    pub sparse: BTreeMap<String, f32>,
}

impl RepRecord {
    fn into_reps(self) -> Result<(DenseRep, SparseRep)> {
        Ok((DenseRep::new(self.dense)?, parse_sparse(&self.sparse, None)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub query: RepRecord,
    pub positive: RepRecord,
    pub negatives: Vec<RepRecord>,
}

impl TryFrom<TrainingRecord> for TrainingInstance {
    type Error = Error;

    fn try_from(r: TrainingRecord) -> Result<Self> {
        let negatives = r
            .negatives
            .into_iter()
            .map(RepRecord::into_reps)
            .collect::<Result<Vec<_>>>()?;
        TrainingInstance::new(r.query.into_reps()?, r.positive.into_reps()?, negatives)
    }
}

/// `{"id", "source"?, "text"}` lines: BM25 corpora and text queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextRecord {
    pub id: String,
    #[serde(default = "other")]
    pub source: String,
    pub text: String,
}

/// Parses one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_converted(path, Ok)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.push(b'\n');
    }
    atomic_write(path, &out)
}

/// Parses each line as `T` and converts it, reporting the line of any
/// failure.
fn read_converted<T, U>(path: &Path, convert: impl Fn(T) -> Result<U>) -> Result<Vec<U>>
where
    T: DeserializeOwned,
{
    let text = super::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let at = || format!("{}:{}", path.display(), n + 1);
            let raw = serde_json::from_str(line).map_err(|e| Error::Format(format!("{}: {e}", at())))?;
            convert(raw).map_err(|e| match e {
                Error::Invalid(msg) => Error::Invalid(format!("{}: {msg}", at())),
                other => other,
            })
        })
        .collect()
}

pub fn read_entries(path: &Path) -> Result<Vec<HybridEntry>> {
    read_converted::<EntryRecord, _>(path, HybridEntry::try_from)
}

pub fn write_entries(path: &Path, entries: &[HybridEntry]) -> Result<()> {
    let records: Vec<EntryRecord> = entries.iter().map(EntryRecord::from).collect();
    write_jsonl(path, &records)
}

pub fn read_training_instances(path: &Path) -> Result<Vec<TrainingInstance>> {
    read_converted::<TrainingRecord, _>(path, TrainingInstance::try_from)
}

pub fn read_text_records(path: &Path) -> Result<Vec<TextRecord>> {
    read_jsonl(path)
}
