//! Sparse and dense text representations derived from masked-language-model
//! output.
//!
//! The lexical pipeline turns a `|T| x |V|` logit matrix into a sparse vector
//! over the vocabulary in three steps:
//!
//! ```text
//! saturate:   s[i][j] = ln(1 + max(0, m[i][j]))
//! aggregate:  w[j]    = max_i s[i][j]            (or the column sum)
//! sparsify:   keep the k largest positive w[j]
//! ```
//!
//! Weights are stored as `f32`. Intermediate sums are accumulated in `f64`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-token vocabulary logits, row-major: row `i` is an input token position,
/// column `j` a vocabulary term.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f32>,
}

impl LogitMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!(
                "logit matrix must have at least one row and column, got {rows}x{cols}"
            )));
        }
        if rows.checked_mul(cols) != Some(values.len()) {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows.saturating_mul(cols),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
                value: values[pos],
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Shape(format!(
                "row {bad} has {} columns, expected {cols}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }
}

/// A logit matrix whose entries are all non-negative, as produced by
/// [`saturate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SaturatedLogits(LogitMatrix);

impl SaturatedLogits {
    /// Wraps a matrix that is already saturated. Rejects negative entries.
    pub fn new(matrix: LogitMatrix) -> Result<Self> {
        if let Some(pos) = matrix.values.iter().position(|v| *v < 0.0) {
            return Err(Error::Invalid(format!(
                "saturated logits must be non-negative, found {} at row {}, column {}",
                matrix.values[pos],
                pos / matrix.cols,
                pos % matrix.cols
            )));
        }
        Ok(Self(matrix))
    }

    pub fn matrix(&self) -> &LogitMatrix {
        &self.0
    }
}

/// Log-saturation of every logit: `ln(1 + ReLU(m))`.
pub fn saturate(logits: &LogitMatrix) -> SaturatedLogits {
    let values = logits.values.iter().map(|&m| saturate_one(m)).collect();
    SaturatedLogits(LogitMatrix {
        rows: logits.rows,
        cols: logits.cols,
        values,
    })
}

#[inline]
fn saturate_one(m: f32) -> f32 {
    f64::from(m.max(0.0)).ln_1p() as f32
}

/// Pooling across token positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Max,
    Sum,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(Aggregation::Max),
            "sum" => Ok(Aggregation::Sum),
            other => Err(Error::Config(format!(
                "unknown aggregation `{other}` (expected max or sum)"
            ))),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Max => "max",
            Aggregation::Sum => "sum",
        })
    }
}

/// Dense term-importance vector `W` of length `|V|`, all entries `>= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TermWeights(Vec<f32>);

impl TermWeights {
    pub fn new(weights: Vec<f32>) -> Result<Self> {
        if let Some(pos) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Invalid(format!(
                "term weight {} at index {pos} is not a finite non-negative value",
                weights[pos]
            )));
        }
        Ok(Self(weights))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Pools saturated logits over token positions into one weight per vocabulary
/// term.
pub fn aggregate(saturated: &SaturatedLogits, mode: Aggregation) -> TermWeights {
    let m = &saturated.0;
    let weights = match mode {
        Aggregation::Max => {
            let mut out = m.row(0).to_vec();
            for i in 1..m.rows {
                for (acc, &v) in out.iter_mut().zip(m.row(i)) {
                    if v > *acc {
                        *acc = v;
                    }
                }
            }
            out
        }
        Aggregation::Sum => {
            let mut acc = vec![0f64; m.cols];
            for i in 0..m.rows {
                for (a, &v) in acc.iter_mut().zip(m.row(i)) {
                    *a += f64::from(v);
                }
            }
            acc.into_iter().map(|v| v as f32).collect()
        }
    };
    TermWeights(weights)
}

/// Sparse lexical representation: `(token_id, weight)` pairs in strictly
/// ascending token order, every weight positive, at most `k_limit` entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRep {
    entries: Vec<(u32, f32)>,
    k_limit: usize,
}

impl SparseRep {
    pub fn empty(k_limit: usize) -> Self {
        Self {
            entries: Vec::new(),
            k_limit,
        }
    }

    /// Builds a canonical representation from unordered pairs.
    ///
    /// Zero weights are dropped. Negative or non-finite weights, duplicate
    /// token ids, and more than `k_limit` nonzero entries are rejected.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f32)>, k_limit: usize) -> Result<Self> {
        let mut entries: Vec<(u32, f32)> = Vec::new();
        for (id, w) in pairs {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Invalid(format!(
                    "sparse weight {w} for token {id} must be finite and non-negative"
                )));
            }
            if w > 0.0 {
                entries.push((id, w));
            }
        }
        entries.sort_unstable_by_key(|&(id, _)| id);
        if let Some(pair) = entries.windows(2).find(|p| p[0].0 == p[1].0) {
            return Err(Error::Invalid(format!(
                "duplicate token id {} in sparse representation",
                pair[0].0
            )));
        }
        if entries.len() > k_limit {
            return Err(Error::Invalid(format!(
                "sparse representation has {} entries, above its limit of {k_limit}",
                entries.len()
            )));
        }
        Ok(Self { entries, k_limit })
    }

    /// Same as [`SparseRep::from_pairs`] with the limit set to the entry count.
    pub fn from_unbounded(pairs: impl IntoIterator<Item = (u32, f32)>) -> Result<Self> {
        let mut rep = Self::from_pairs(pairs, usize::MAX)?;
        rep.k_limit = rep.entries.len().max(1);
        Ok(rep)
    }

    pub fn entries(&self) -> &[(u32, f32)] {
        &self.entries
    }

    pub fn k_limit(&self) -> usize {
        self.k_limit
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token_id: u32) -> Option<f32> {
        self.entries
            .binary_search_by_key(&token_id, |&(id, _)| id)
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn token_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(id, _)| id)
    }

    /// Largest token id plus one, or zero for an empty representation.
    pub fn min_vocab_size(&self) -> usize {
        self.entries.last().map_or(0, |&(id, _)| id as usize + 1)
    }

    /// Keeps the `k` heaviest entries under the same ordering as
    /// [`topk_sparsify`]. Truncating a top-k representation to `k' <= k`
    /// yields the top-k' representation of the original weights.
    pub fn truncate_top(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let mut kept = self.entries.clone();
        if kept.len() > k {
            kept.sort_unstable_by(heavier_first);
            kept.truncate(k);
            kept.sort_unstable_by_key(|&(id, _)| id);
        }
        Ok(Self {
            entries: kept,
            k_limit: k,
        })
    }

    /// Materializes the representation as a dense vector of length `vocab_size`.
    pub fn to_dense(&self, vocab_size: usize) -> Vec<f32> {
        let mut out = vec![0.0; vocab_size.max(self.min_vocab_size())];
        for &(id, w) in &self.entries {
            out[id as usize] = w;
        }
        out
    }
}

/// Heavier weight first; equal weights by ascending token id.
fn heavier_first(a: &(u32, f32), b: &(u32, f32)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Keeps the `k` largest positive weights.
///
/// Ties at the cut are resolved in favour of the smaller token id.
pub fn topk_sparsify(weights: &TermWeights, k: usize) -> Result<SparseRep> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let mut positive: Vec<(u32, f32)> = weights
        .0
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(j, &w)| (j as u32, w))
        .collect();
    if positive.len() > k {
        positive.select_nth_unstable_by(k - 1, heavier_first);
        positive.truncate(k);
    }
    positive.sort_unstable_by_key(|&(id, _)| id);
    Ok(SparseRep {
        entries: positive,
        k_limit: k,
    })
}

/// Summary dense vector (the sequence-level encoding).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseRep(Vec<f32>);

impl DenseRep {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "dense value {} at index {pos} is not finite",
                values[pos]
            )));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeConfig {
    pub k: usize,
    pub aggregation: Aggregation,
}

impl EncodeConfig {
    pub fn new(k: usize, aggregation: Aggregation) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(Self { k, aggregation })
    }
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            k: 128,
            aggregation: Aggregation::Max,
        }
    }
}

/// Full lexical pipeline: saturate, aggregate, then keep the top `k` terms.
pub fn encode(logits: &LogitMatrix, cfg: &EncodeConfig) -> Result<SparseRep> {
    let weights = aggregate(&saturate(logits), cfg.aggregation);
    topk_sparsify(&weights, cfg.k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f32]]) -> LogitMatrix {
        LogitMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn weights(rep: &SparseRep) -> Vec<(u32, f32)> {
        rep.entries().to_vec()
    }

    #[test]
    fn saturate_fixed_points() {
        let s = saturate(&m(&[&[0.0, -5.0, std::f32::consts::E - 1.0]]));
        let row = s.matrix().row(0);
        assert_eq!(row[0], 0.0);
        assert_eq!(row[1], 0.0);
        assert!((row[2] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_logit_names_cell() {
        let err = LogitMatrix::new(2, 2, vec![0.0, 1.0, f32::NAN, 2.0]).unwrap_err();
        match err {
            Error::NonFinite { row, col, .. } => assert_eq!((row, col), (1, 0)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(LogitMatrix::new(1, 2, vec![f32::INFINITY, 0.0]).is_err());
        assert!(LogitMatrix::new(2, 2, vec![0.0; 3]).is_err());
        assert!(LogitMatrix::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn aggregate_modes() {
        let s = SaturatedLogits::new(m(&[&[0.2, 0.7], &[0.5, 0.1]])).unwrap();
        assert_eq!(aggregate(&s, Aggregation::Max).as_slice(), &[0.5, 0.7]);
        let sum = aggregate(&s, Aggregation::Sum);
        assert!((sum.as_slice()[0] - 0.7).abs() < 1e-6);
        assert!((sum.as_slice()[1] - 0.8).abs() < 1e-6);

        let single = SaturatedLogits::new(m(&[&[0.3, 0.0, 0.9]])).unwrap();
        assert_eq!(aggregate(&single, Aggregation::Max).as_slice(), &[0.3, 0.0, 0.9]);
        assert_eq!(aggregate(&single, Aggregation::Sum).as_slice(), &[0.3, 0.0, 0.9]);
    }

    #[test]
    fn saturated_rejects_negative() {
        assert!(SaturatedLogits::new(m(&[&[0.1, -0.1]])).is_err());
    }

    #[test]
    fn topk_examples() {
        let w = TermWeights::new(vec![0.1, 0.9, 0.0, 0.4]).unwrap();
        assert_eq!(weights(&topk_sparsify(&w, 2).unwrap()), vec![(1, 0.9), (3, 0.4)]);

        let zeros = TermWeights::new(vec![0.0, 0.0]).unwrap();
        assert!(topk_sparsify(&zeros, 5).unwrap().is_empty());

        let ties = TermWeights::new(vec![0.5, 0.5, 0.5]).unwrap();
        assert_eq!(weights(&topk_sparsify(&ties, 2).unwrap()), vec![(0, 0.5), (1, 0.5)]);

        assert!(matches!(topk_sparsify(&w, 0), Err(Error::Config(_))));
    }

    #[test]
    fn encode_hand_trace() {
        let cfg = EncodeConfig::new(2, Aggregation::Max).unwrap();
        let rep = encode(&m(&[&[1.0, -2.0], &[0.5, 3.0]]), &cfg).unwrap();
        let e = rep.entries();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].0, 0);
        assert!((f64::from(e[0].1) - 2f64.ln()).abs() < 1e-6);
        assert_eq!(e[1].0, 1);
        assert!((f64::from(e[1].1) - 4f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn all_negative_encodes_empty() {
        let rep = encode(&m(&[&[-1.0, -0.5], &[-3.0, -0.1]]), &EncodeConfig::default()).unwrap();
        assert!(rep.is_empty());
    }

    #[test]
    fn from_pairs_canonicalizes() {
        let rep = SparseRep::from_pairs([(9, 1.0), (2, 0.0), (3, 2.0)], 4).unwrap();
        assert_eq!(rep.entries(), &[(3, 2.0), (9, 1.0)]);
        assert!(SparseRep::from_pairs([(1, 1.0), (1, 2.0)], 4).is_err());
        assert!(SparseRep::from_pairs([(1, -1.0)], 4).is_err());
        assert!(SparseRep::from_pairs([(1, 1.0), (2, 1.0)], 1).is_err());
    }

    #[test]
    fn truncate_matches_direct_topk() {
        let w = TermWeights::new(vec![0.3, 0.9, 0.3, 0.0, 0.7, 0.3]).unwrap();
        let full = topk_sparsify(&w, 6).unwrap();
        for k in 1..=6 {
            assert_eq!(full.truncate_top(k).unwrap(), topk_sparsify(&w, k).unwrap());
        }
    }
}
