//! In-memory hybrid index with a single-file on-disk form.
//!
//! Entries are held sorted by id. Sparse weights live only in the postings
//! (token id -> entries carrying that token, ascending entry order); dense
//! vectors live in one contiguous row-major block.
//!
//! File layout, all integers little-endian:
//!
//! ```text
//! "HRIX" | u32 version | u32 section count
//! section* := u32 tag | u64 payload length | payload | u32 crc32(payload)
//! sections  : META (JSON), ENTR (ids, sources, limits, tokens),
//!             DENS (u32 rows, u32 dim, f32 rows), POST (posting lists)
//! ```

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::repr::{DenseRep, SparseRep};
use crate::scoring::{
    dot_f32, finalize, interpolate, ranking_order, Normalization, ScoredCandidate, ScoringConfig,
    SourceTag,
};

/// One stored (or query-side) text: dense and sparse representations plus
/// optional surface tokens for explanation.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridEntry {
    pub id: String,
    pub source: SourceTag,
    pub dense: DenseRep,
    pub sparse: SparseRep,
    pub surface_tokens: Option<Vec<String>>,
}

impl HybridEntry {
    pub fn new(id: impl Into<String>, source: SourceTag, dense: DenseRep, sparse: SparseRep) -> Self {
        Self {
            id: id.into(),
            source,
            dense,
            sparse,
            surface_tokens: None,
        }
    }

    pub fn with_tokens(mut self, tokens: Vec<String>) -> Self {
        self.surface_tokens = Some(tokens);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct IndexMeta {
    /// Dense dimensionality `h`.
    pub dim: usize,
    /// Declared vocabulary size; token ids are bounds-checked when present.
    pub vocab_size: Option<usize>,
    /// Largest sparsity limit among the stored entries.
    pub k: usize,
    pub entry_count: usize,
    /// Free-form description of how the representations were produced.
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    pub vocab_size: Option<usize>,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posting {
    pub entry: u32,
    pub weight: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridIndex {
    meta: IndexMeta,
    ids: Vec<String>,
    sources: Vec<SourceTag>,
    k_limits: Vec<u32>,
    surface: Vec<Option<Vec<String>>>,
    dense: Vec<f32>,
    postings: BTreeMap<u32, Vec<Posting>>,
}

impl HybridIndex {
    pub fn build(entries: Vec<HybridEntry>) -> Result<Self> {
        Self::build_with(entries, BuildOptions::default())
    }

    pub fn build_with(mut entries: Vec<HybridEntry>, opts: BuildOptions) -> Result<Self> {
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = entries.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::DuplicateId(w[0].id.clone()));
        }
        let dim = entries.first().map_or(0, |e| e.dense.len());
        let mut index = HybridIndex {
            meta: IndexMeta {
                dim,
                vocab_size: opts.vocab_size,
                k: 0,
                entry_count: entries.len(),
                config: opts.config,
            },
            ids: Vec::with_capacity(entries.len()),
            sources: Vec::with_capacity(entries.len()),
            k_limits: Vec::with_capacity(entries.len()),
            surface: Vec::with_capacity(entries.len()),
            dense: Vec::with_capacity(entries.len() * dim),
            postings: BTreeMap::new(),
        };
        for (ordinal, e) in entries.into_iter().enumerate() {
            if e.dense.len() != dim {
                return Err(Error::Dimension {
                    what: format!("entry `{}`", e.id),
                    expected: dim,
                    actual: e.dense.len(),
                });
            }
            if let Some(v) = opts.vocab_size {
                if e.sparse.min_vocab_size() > v {
                    return Err(Error::Dimension {
                        what: format!("vocabulary of entry `{}`", e.id),
                        expected: v,
                        actual: e.sparse.min_vocab_size(),
                    });
                }
            }
            let ordinal = u32::try_from(ordinal)
                .map_err(|_| Error::Invalid("too many entries for one index".into()))?;
            for &(token, weight) in e.sparse.entries() {
                index.postings.entry(token).or_default().push(Posting {
                    entry: ordinal,
                    weight,
                });
            }
            index.meta.k = index.meta.k.max(e.sparse.k_limit());
            index.k_limits.push(clamp_u32(e.sparse.k_limit()));
            index.dense.extend_from_slice(e.dense.as_slice());
            index.ids.push(e.id);
            index.sources.push(e.source);
            index.surface.push(e.surface_tokens);
        }
        Ok(index)
    }

    pub fn meta(&self) -> &IndexMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn postings(&self) -> &BTreeMap<u32, Vec<Posting>> {
        &self.postings
    }

    pub fn dense_row(&self, ordinal: usize) -> &[f32] {
        &self.dense[ordinal * self.meta.dim..(ordinal + 1) * self.meta.dim]
    }

    pub fn source_of(&self, ordinal: usize) -> SourceTag {
        self.sources[ordinal]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.binary_search_by(|probe| probe.as_str().cmp(id)).ok()
    }

    /// Reassembles every stored entry, in id order.
    pub fn to_entries(&self) -> Vec<HybridEntry> {
        let mut sparse: Vec<Vec<(u32, f32)>> = vec![Vec::new(); self.len()];
        for (&token, list) in &self.postings {
            for p in list {
                sparse[p.entry as usize].push((token, p.weight));
            }
        }
        sparse
            .into_iter()
            .enumerate()
            .map(|(i, pairs)| self.assemble(i, pairs))
            .collect()
    }

    pub fn entry(&self, id: &str) -> Option<HybridEntry> {
        let ordinal = self.position(id)?;
        let pairs = self
            .postings
            .iter()
            .filter_map(|(&token, list)| {
                list.binary_search_by_key(&(ordinal as u32), |p| p.entry)
                    .ok()
                    .map(|i| (token, list[i].weight))
            })
            .collect();
        Some(self.assemble(ordinal, pairs))
    }

    fn assemble(&self, ordinal: usize, pairs: Vec<(u32, f32)>) -> HybridEntry {
        HybridEntry {
            id: self.ids[ordinal].clone(),
            source: self.sources[ordinal],
            dense: DenseRep::new(self.dense_row(ordinal).to_vec())
                .expect("stored dense rows are finite"),
            sparse: SparseRep::from_pairs(pairs, self.k_limits[ordinal] as usize)
                .expect("stored sparse entries are canonical"),
            surface_tokens: self.surface[ordinal].clone(),
        }
    }

    /// Top `top_n` candidates for `query` over every stored entry.
    pub fn query(
        &self,
        query: &HybridEntry,
        cfg: &ScoringConfig,
        top_n: usize,
    ) -> Result<Vec<ScoredCandidate>> {
        self.query_filtered(query, cfg, top_n, None)
    }

    /// Like [`HybridIndex::query`], restricted to entries whose source is in
    /// `sources` when a filter is given.
    pub fn query_filtered(
        &self,
        query: &HybridEntry,
        cfg: &ScoringConfig,
        top_n: usize,
        sources: Option<&[SourceTag]>,
    ) -> Result<Vec<ScoredCandidate>> {
        cfg.validate()?;
        if self.is_empty() || top_n == 0 {
            return Ok(Vec::new());
        }
        self.check_query(query)?;
        let lexical = self.lexical_scores(&query.sparse);
        let keep = |i: usize| sources.is_none_or(|s| s.contains(&self.sources[i]));
        let score = |i: usize| {
            let dense = dot_f32(query.dense.as_slice(), self.dense_row(i));
            ScoredCandidate {
                candidate_id: self.ids[i].clone(),
                dense_score: dense,
                lexical_score: lexical[i],
                combined: interpolate(cfg.alpha, dense, lexical[i]),
                source: self.sources[i],
            }
        };
        let mut scored: Vec<ScoredCandidate> = if self.len() >= 4096 {
            (0..self.len())
                .into_par_iter()
                .filter(|&i| keep(i))
                .map(score)
                .collect()
        } else {
            (0..self.len()).filter(|&i| keep(i)).map(score).collect()
        };
        if cfg.normalization == Normalization::None && top_n < scored.len() {
            scored.select_nth_unstable_by(top_n - 1, ranking_order);
            scored.truncate(top_n);
            scored.sort_by(ranking_order);
            return Ok(scored);
        }
        let mut ranked = finalize(scored, cfg)?;
        ranked.truncate(top_n);
        Ok(ranked)
    }

    fn check_query(&self, query: &HybridEntry) -> Result<()> {
        if query.dense.len() != self.meta.dim {
            return Err(Error::Dimension {
                what: format!("query `{}`", query.id),
                expected: self.meta.dim,
                actual: query.dense.len(),
            });
        }
        if let Some(v) = self.meta.vocab_size {
            if query.sparse.min_vocab_size() > v {
                return Err(Error::Dimension {
                    what: format!("vocabulary of query `{}`", query.id),
                    expected: v,
                    actual: query.sparse.min_vocab_size(),
                });
            }
        }
        Ok(())
    }

    /// Document-at-a-time traversal of the query's posting lists. For each
    /// entry, contributions are added in ascending token order.
    fn lexical_scores(&self, query: &SparseRep) -> Vec<f64> {
        let mut scores = vec![0f64; self.len()];
        let lists: Vec<(f64, &[Posting])> = query
            .entries()
            .iter()
            .filter_map(|&(token, w)| {
                self.postings
                    .get(&token)
                    .map(|l| (f64::from(w), l.as_slice()))
            })
            .collect();
        let mut cursors = vec![0usize; lists.len()];
        let mut heap: BinaryHeap<Reverse<(u32, usize)>> = lists
            .iter()
            .enumerate()
            .map(|(li, (_, l))| Reverse((l[0].entry, li)))
            .collect();
        while let Some(Reverse((entry, _))) = heap.peek().copied() {
            let mut acc = 0f64;
            while let Some(Reverse((e, li))) = heap.peek().copied() {
                if e != entry {
                    break;
                }
                heap.pop();
                let (qw, list) = lists[li];
                acc += qw * f64::from(list[cursors[li]].weight);
                cursors[li] += 1;
                if let Some(next) = list.get(cursors[li]) {
                    heap.push(Reverse((next.entry, li)));
                }
            }
            scores[entry as usize] = acc;
        }
        scores
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        atomic_write(path.as_ref(), &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, FORMAT_VERSION);
        put_u32(&mut out, 4);

        write_section(&mut out, b"META", &serde_json::to_vec(&self.meta)?);

        let mut entr = Vec::new();
        put_u32(&mut entr, clamp_u32(self.len()));
        for i in 0..self.len() {
            put_str(&mut entr, &self.ids[i]);
            entr.push(self.sources[i].code());
            put_u32(&mut entr, self.k_limits[i]);
            match &self.surface[i] {
                None => entr.push(0),
                Some(tokens) => {
                    entr.push(1);
                    put_u32(&mut entr, clamp_u32(tokens.len()));
                    for t in tokens {
                        put_str(&mut entr, t);
                    }
                }
            }
        }
        write_section(&mut out, b"ENTR", &entr);

        let mut dens = Vec::with_capacity(8 + self.dense.len() * 4);
        put_u32(&mut dens, clamp_u32(self.len()));
        put_u32(&mut dens, clamp_u32(self.meta.dim));
        for v in &self.dense {
            dens.extend_from_slice(&v.to_le_bytes());
        }
        write_section(&mut out, b"DENS", &dens);

        let mut post = Vec::new();
        put_u32(&mut post, clamp_u32(self.postings.len()));
        for (&token, list) in &self.postings {
            put_u32(&mut post, token);
            put_u32(&mut post, clamp_u32(list.len()));
            for p in list {
                put_u32(&mut post, p.entry);
                post.extend_from_slice(&p.weight.to_le_bytes());
            }
        }
        write_section(&mut out, b"POST", &post);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, "header");
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not an index file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let count = r.u32()?;
        if count != 4 {
            return Err(Error::Format(format!("expected 4 sections, found {count}")));
        }
        let meta_bytes = read_section(&mut r, b"META")?;
        let entr = read_section(&mut r, b"ENTR")?;
        let dens = read_section(&mut r, b"DENS")?;
        let post = read_section(&mut r, b"POST")?;
        if !r.is_done() {
            return Err(Error::Format("trailing bytes after last section".into()));
        }

        let meta: IndexMeta = serde_json::from_slice(meta_bytes)
            .map_err(|e| Error::Format(format!("metadata: {e}")))?;

        let mut r = ByteReader::new(entr, "ENTR");
        let n = r.u32()? as usize;
        if n != meta.entry_count {
            return Err(Error::Format(format!(
                "metadata lists {} entries, entry section has {n}",
                meta.entry_count
            )));
        }
        let mut ids = Vec::with_capacity(n);
        let mut sources = Vec::with_capacity(n);
        let mut k_limits = Vec::with_capacity(n);
        let mut surface = Vec::with_capacity(n);
        for _ in 0..n {
            ids.push(r.string()?);
            let code = r.u8()?;
            sources.push(
                SourceTag::from_code(code)
                    .ok_or_else(|| Error::Format(format!("unknown source code {code}")))?,
            );
            k_limits.push(r.u32()?);
            surface.push(match r.u8()? {
                0 => None,
                1 => {
                    let len = r.u32()? as usize;
                    let mut tokens = Vec::with_capacity(len.min(1 << 16));
                    for _ in 0..len {
                        tokens.push(r.string()?);
                    }
                    Some(tokens)
                }
                other => return Err(Error::Format(format!("bad token flag {other}"))),
            });
        }
        r.finish()?;
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("entry ids are not strictly ascending".into()));
        }

        let mut r = ByteReader::new(dens, "DENS");
        let rows = r.u32()? as usize;
        let dim = r.u32()? as usize;
        if rows != n || dim != meta.dim {
            return Err(Error::Format(format!(
                "dense block is {rows}x{dim}, expected {n}x{}",
                meta.dim
            )));
        }
        let mut dense = Vec::with_capacity(rows * dim);
        for _ in 0..rows * dim {
            let v = r.f32()?;
            if !v.is_finite() {
                return Err(Error::Format("non-finite dense value".into()));
            }
            dense.push(v);
        }
        r.finish()?;

        let mut r = ByteReader::new(post, "POST");
        let lists = r.u32()? as usize;
        let mut postings = BTreeMap::new();
        let mut per_entry = vec![0u32; n];
        let mut last_token = None;
        for _ in 0..lists {
            let token = r.u32()?;
            if last_token.is_some_and(|t| t >= token) {
                return Err(Error::Format("posting lists out of order".into()));
            }
            last_token = Some(token);
            let len = r.u32()? as usize;
            let mut list = Vec::with_capacity(len.min(n));
            for _ in 0..len {
                let entry = r.u32()?;
                let weight = r.f32()?;
                if entry as usize >= n || !(weight.is_finite() && weight > 0.0) {
                    return Err(Error::Format(format!("invalid posting for token {token}")));
                }
                if list.last().is_some_and(|p: &Posting| p.entry >= entry) {
                    return Err(Error::Format(format!("unsorted postings for token {token}")));
                }
                per_entry[entry as usize] += 1;
                list.push(Posting { entry, weight });
            }
            if list.is_empty() {
                return Err(Error::Format(format!("empty posting list for token {token}")));
            }
            postings.insert(token, list);
        }
        r.finish()?;
        if let Some(i) = (0..n).find(|&i| per_entry[i] > k_limits[i]) {
            return Err(Error::Format(format!(
                "entry `{}` has more postings than its sparsity limit",
                ids[i]
            )));
        }

        Ok(HybridIndex {
            meta,
            ids,
            sources,
            k_limits,
            surface,
            dense,
            postings,
        })
    }
}

const MAGIC: &[u8; 4] = b"HRIX";
pub const FORMAT_VERSION: u32 = 1;

fn clamp_u32(v: usize) -> u32 {
    u32::try_from(v).unwrap_or(u32::MAX)
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, clamp_u32(s.len()));
    out.extend_from_slice(s.as_bytes());
}

fn write_section(out: &mut Vec<u8>, tag: &[u8; 4], payload: &[u8]) {
    out.extend_from_slice(tag);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
    put_u32(out, crc32fast::hash(payload));
}

fn read_section<'a>(r: &mut ByteReader<'a>, tag: &[u8; 4]) -> Result<&'a [u8]> {
    let name = String::from_utf8_lossy(tag).into_owned();
    r.context = "section header";
    let found = r.take(4)?;
    if found != tag {
        return Err(Error::Format(format!(
            "expected section {name}, found {}",
            String::from_utf8_lossy(found)
        )));
    }
    let len = r.u64()?;
    let len = usize::try_from(len)
        .ok()
        .filter(|&l| l <= r.remaining())
        .ok_or_else(|| Error::Truncated(format!("{name} section claims {len} bytes")))?;
    let payload = r.take(len)?;
    r.context = "section checksum";
    let stored = r.u32()?;
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(Error::Checksum {
            section: name,
            stored,
            computed,
        });
    }
    Ok(payload)
}

/// Cursor over a byte slice; running past the end is a truncation error.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    pub(crate) context: &'static str,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8], context: &'static str) -> Self {
        Self {
            bytes,
            pos: 0,
            context,
        }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn is_done(&self) -> bool {
        self.pos == self.bytes.len()
    }

    fn finish(&self) -> Result<()> {
        if self.is_done() {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "{} unread bytes in {}",
                self.remaining(),
                self.context
            )))
        }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Truncated(format!(
                "{}: needed {n} bytes at offset {}, {} left",
                self.context,
                self.pos,
                self.remaining()
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::Format("invalid UTF-8 string".into()))
    }
}
