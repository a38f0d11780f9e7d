//! Relevance scoring and ranking.
//!
//! A query `q` and candidate `c` are compared through two inner products and
//! blended with a single weight `alpha`:
//!
//! ```text
//! combined = alpha * (q.dense . c.dense) + (1 - alpha) * (q.sparse . c.sparse)
//! ```
//!
//! Rankings sort by `combined` descending and break ties by ascending
//! candidate id, so identical inputs always produce identical output.
//!
//! The source-aware variant min-max normalizes both components across the
//! candidate list, blends them, and multiplies the result by a per-source
//! prior confidence.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::HybridEntry;
use crate::repr::{DenseRep, SparseRep};

/// Origin of a candidate text on a product page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Attribute,
    Bullet,
    Cqa,
    Description,
    Osp,
    Review,
    Other,
}

impl SourceTag {
    pub const ALL: [SourceTag; 7] = [
        SourceTag::Attribute,
        SourceTag::Bullet,
        SourceTag::Cqa,
        SourceTag::Description,
        SourceTag::Osp,
        SourceTag::Review,
        SourceTag::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceTag::Attribute => "attribute",
            SourceTag::Bullet => "bullet",
            SourceTag::Cqa => "cqa",
            SourceTag::Description => "description",
            SourceTag::Osp => "osp",
            SourceTag::Review => "review",
            SourceTag::Other => "other",
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Maps a free-form label onto the closed set; anything unrecognized is
    /// [`SourceTag::Other`].
    pub fn parse_lenient(label: &str) -> Self {
        match label.trim().to_ascii_lowercase().as_str() {
            "attribute" | "attributes" | "attr" => SourceTag::Attribute,
            "bullet" | "bullets" => SourceTag::Bullet,
            "cqa" => SourceTag::Cqa,
            "description" | "desc" => SourceTag::Description,
            "osp" => SourceTag::Osp,
            "review" | "reviews" => SourceTag::Review,
            _ => SourceTag::Other,
        }
    }
}

impl FromStr for SourceTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Self::parse_lenient(s))
    }
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    None,
    MinMaxPerQuery,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Normalization::None),
            "min_max_per_query" | "minmax" | "min-max" => Ok(Normalization::MinMaxPerQuery),
            other => Err(Error::Config(format!("unknown normalization `{other}`"))),
        }
    }
}

pub type SourcePriors = BTreeMap<SourceTag, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub alpha: f64,
    pub source_priors: Option<SourcePriors>,
    pub normalization: Normalization,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            source_priors: None,
            normalization: Normalization::None,
        }
    }
}

impl ScoringConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Switches to source-aware scoring: min-max normalized components, then
    /// multiplied by the prior of each candidate's source.
    pub fn with_priors(mut self, priors: SourcePriors) -> Result<Self> {
        self.source_priors = Some(priors);
        self.normalization = Normalization::MinMaxPerQuery;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if let Some(priors) = &self.source_priors {
            if let Some((tag, p)) = priors.iter().find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
                return Err(Error::Config(format!(
                    "prior for source `{tag}` must be positive, got {p}"
                )));
            }
            if self.normalization != Normalization::MinMaxPerQuery {
                return Err(Error::Config(
                    "source priors require min_max_per_query normalization".into(),
                ));
            }
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub candidate_id: String,
    /// Raw dense inner product.
    pub dense_score: f64,
    /// Raw sparse inner product.
    pub lexical_score: f64,
    /// Final ranking score. Equals the alpha blend of the two raw components
    /// when no normalization is configured.
    pub combined: f64,
    pub source: SourceTag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridScore {
    pub dense: f64,
    pub lexical: f64,
    pub combined: f64,
}

#[inline]
pub fn interpolate(alpha: f64, dense: f64, lexical: f64) -> f64 {
    alpha * dense + (1.0 - alpha) * lexical
}

/// Inner product of two equal-length `f32` slices, accumulated in `f64`.
pub(crate) fn dot_f32(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0f64; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for i in 0..8 {
            lanes[i] += f64::from(ca[i]) * f64::from(cb[i]);
        }
    }
    lanes.iter().sum::<f64>() + tail
}

pub fn dot_dense(a: &DenseRep, b: &DenseRep) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            what: "dense vectors".into(),
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(dot_f32(a.as_slice(), b.as_slice()))
}

/// Sum of weight products over the token ids both representations share.
/// Products are accumulated in ascending token order.
pub fn dot_sparse(a: &SparseRep, b: &SparseRep) -> f64 {
    let (a, b) = (a.entries(), b.entries());
    let (mut i, mut j) = (0, 0);
    let mut acc = 0f64;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                acc += f64::from(a[i].1) * f64::from(b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

pub fn hybrid_score(
    q_dense: &DenseRep,
    q_sparse: &SparseRep,
    c_dense: &DenseRep,
    c_sparse: &SparseRep,
    alpha: f64,
) -> Result<HybridScore> {
    check_alpha(alpha)?;
    let dense = dot_dense(q_dense, c_dense)?;
    let lexical = dot_sparse(q_sparse, c_sparse);
    Ok(HybridScore {
        dense,
        lexical,
        combined: interpolate(alpha, dense, lexical),
    })
}

/// Descending combined score, then ascending candidate id.
pub fn ranking_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.combined
        .total_cmp(&a.combined)
        .then_with(|| a.candidate_id.cmp(&b.candidate_id))
}

pub fn sort_ranked(scored: &mut [ScoredCandidate]) {
    scored.sort_by(ranking_order);
}

const PARALLEL_THRESHOLD: usize = 4096;

/// Scores every candidate against the query and returns them best first.
pub fn rank(
    query: &HybridEntry,
    candidates: &[HybridEntry],
    cfg: &ScoringConfig,
) -> Result<Vec<ScoredCandidate>> {
    cfg.validate()?;
    let h = query.dense.len();
    let score_one = |c: &HybridEntry| -> Result<ScoredCandidate> {
        if c.dense.len() != h {
            return Err(Error::Dimension {
                what: format!("candidate `{}`", c.id),
                expected: h,
                actual: c.dense.len(),
            });
        }
        let dense = dot_f32(query.dense.as_slice(), c.dense.as_slice());
        let lexical = dot_sparse(&query.sparse, &c.sparse);
        Ok(ScoredCandidate {
            candidate_id: c.id.clone(),
            dense_score: dense,
            lexical_score: lexical,
            combined: interpolate(cfg.alpha, dense, lexical),
            source: c.source,
        })
    };
    let scored = if candidates.len() >= PARALLEL_THRESHOLD {
        candidates.par_iter().map(score_one).collect::<Result<Vec<_>>>()?
    } else {
        candidates.iter().map(score_one).collect::<Result<Vec<_>>>()?
    };
    finalize(scored, cfg)
}

/// Applies the configured normalization (and priors) to raw scores and sorts.
pub(crate) fn finalize(
    mut scored: Vec<ScoredCandidate>,
    cfg: &ScoringConfig,
) -> Result<Vec<ScoredCandidate>> {
    match cfg.normalization {
        Normalization::None => {
            sort_ranked(&mut scored);
            Ok(scored)
        }
        Normalization::MinMaxPerQuery => {
            normalize_and_scale(&mut scored, cfg.alpha, cfg.source_priors.as_ref())?;
            Ok(scored)
        }
    }
}

/// Source-aware re-ranking of a scored list.
///
/// Dense and lexical components are min-max normalized to `[0, 1]` over the
/// list (a constant component maps to 0.5), blended with `cfg.alpha`, and
/// multiplied by the prior of each candidate's source. The raw components are
/// kept; only `combined` changes.
pub fn source_aware_rescale(
    mut scored: Vec<ScoredCandidate>,
    cfg: &ScoringConfig,
) -> Result<Vec<ScoredCandidate>> {
    cfg.validate()?;
    let priors = cfg
        .source_priors
        .as_ref()
        .ok_or_else(|| Error::Config("source-aware rescaling needs source priors".into()))?;
    if cfg.normalization != Normalization::MinMaxPerQuery {
        return Err(Error::Config(
            "source-aware rescaling needs min_max_per_query normalization".into(),
        ));
    }
    normalize_and_scale(&mut scored, cfg.alpha, Some(priors))?;
    Ok(scored)
}

fn normalize_and_scale(
    scored: &mut [ScoredCandidate],
    alpha: f64,
    priors: Option<&SourcePriors>,
) -> Result<()> {
    let dense = MinMax::over(scored.iter().map(|s| s.dense_score));
    let lexical = MinMax::over(scored.iter().map(|s| s.lexical_score));
    for s in scored.iter_mut() {
        let prior = match priors {
            Some(p) => *p
                .get(&s.source)
                .ok_or_else(|| Error::MissingPrior(s.source.to_string()))?,
            None => 1.0,
        };
        s.combined = prior
            * interpolate(
                alpha,
                dense.apply(s.dense_score),
                lexical.apply(s.lexical_score),
            );
    }
    sort_ranked(scored);
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct MinMax {
    min: f64,
    max: f64,
}

impl MinMax {
    fn over(values: impl Iterator<Item = f64>) -> Self {
        values.fold(
            MinMax {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |acc, v| MinMax {
                min: acc.min.min(v),
                max: acc.max.max(v),
            },
        )
    }

    fn apply(self, v: f64) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            (v - self.min) / span
        } else {
            0.5
        }
    }
}
