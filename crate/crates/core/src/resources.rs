//! Analytical cost model for two-tower and cross rankers, plus wall-clock
//! latency measurement of the hybrid index.
//!
//! Interaction FLOPs and stored scalars per candidate, with `h` the dense
//! size, `n` the maximum sequence length and `k` the sparse token count:
//!
//! | scheme            | interaction      | storage  |
//! |-------------------|------------------|----------|
//! | cross encoder     | n/a              | n/a      |
//! | independent dense | `2h`             | `h`      |
//! | late interaction  | `2n^2 h + n`     | `n h`    |
//! | sparse lexical    | `2k`             | `2k`     |
//! | hybrid            | `2(h + k)`       | `h + 2k` |

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{HybridEntry, HybridIndex};
use crate::scoring::ScoringConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    CrossEncoder,
    IndependentDense,
    LateInteraction,
    SparseLexical,
    Hybrid,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::CrossEncoder,
        Scheme::IndependentDense,
        Scheme::LateInteraction,
        Scheme::SparseLexical,
        Scheme::Hybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::CrossEncoder => "cross_encoder",
            Scheme::IndependentDense => "independent_dense",
            Scheme::LateInteraction => "late_interaction",
            Scheme::SparseLexical => "sparse_lexical",
            Scheme::Hybrid => "hybrid",
        }
    }

    pub fn interaction_formula(self) -> Option<&'static str> {
        match self {
            Scheme::CrossEncoder => None,
            Scheme::IndependentDense => Some("2h"),
            Scheme::LateInteraction => Some("2n^2*h+n"),
            Scheme::SparseLexical => Some("2k"),
            Scheme::Hybrid => Some("2(h+k)"),
        }
    }

    pub fn storage_formula(self) -> Option<&'static str> {
        match self {
            Scheme::CrossEncoder => None,
            Scheme::IndependentDense => Some("h"),
            Scheme::LateInteraction => Some("n*h"),
            Scheme::SparseLexical => Some("2k"),
            Scheme::Hybrid => Some("h+2k"),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s.replace('-', "_"))
            .ok_or_else(|| Error::Config(format!("unknown ranking scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModelParams {
    pub h: u64,
    pub n: u64,
    pub k: u64,
    pub scheme: Scheme,
}

impl CostModelParams {
    pub fn new(h: u64, n: u64, k: u64, scheme: Scheme) -> Result<Self> {
        if h == 0 || n == 0 || k == 0 {
            return Err(Error::Config(format!(
                "cost model sizes must be positive (h={h}, n={n}, k={k})"
            )));
        }
        Ok(Self { h, n, k, scheme })
    }
}

fn overflow() -> Error {
    Error::Invalid("cost formula overflows 64 bits".into())
}

/// FLOPs spent comparing one query with one stored candidate.
pub fn interaction_flops(p: &CostModelParams) -> Result<u64> {
    let CostModelParams { h, n, k, scheme } = *p;
    match scheme {
        Scheme::CrossEncoder => Err(Error::NotApplicable(
            "a cross encoder has no separate interaction step".into(),
        )),
        Scheme::IndependentDense => h.checked_mul(2).ok_or_else(overflow),
        Scheme::LateInteraction => n
            .checked_mul(n)
            .and_then(|v| v.checked_mul(h))
            .and_then(|v| v.checked_mul(2))
            .and_then(|v| v.checked_add(n))
            .ok_or_else(overflow),
        Scheme::SparseLexical => k.checked_mul(2).ok_or_else(overflow),
        Scheme::Hybrid => h
            .checked_add(k)
            .and_then(|v| v.checked_mul(2))
            .ok_or_else(overflow),
    }
}

/// Scalars stored offline per candidate. A sparse token counts as two
/// scalars (id and weight).
pub fn storage_per_item(p: &CostModelParams) -> Result<u64> {
    let CostModelParams { h, n, k, scheme } = *p;
    match scheme {
        Scheme::CrossEncoder => Err(Error::NotApplicable(
            "a cross encoder stores no candidate representation".into(),
        )),
        Scheme::IndependentDense => Ok(h),
        Scheme::LateInteraction => n.checked_mul(h).ok_or_else(overflow),
        Scheme::SparseLexical => k.checked_mul(2).ok_or_else(overflow),
        Scheme::Hybrid => k
            .checked_mul(2)
            .and_then(|v| v.checked_add(h))
            .ok_or_else(overflow),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub scheme: Scheme,
    pub interaction_formula: Option<String>,
    pub interaction_flops: Option<u64>,
    pub storage_formula: Option<String>,
    pub storage_scalars: Option<u64>,
}

/// One row per scheme for the given sizes.
pub fn cost_table(h: u64, n: u64, k: u64) -> Result<Vec<CostRow>> {
    Scheme::ALL
        .into_iter()
        .map(|scheme| {
            let p = CostModelParams::new(h, n, k, scheme)?;
            Ok(CostRow {
                scheme,
                interaction_formula: scheme.interaction_formula().map(str::to_string),
                interaction_flops: not_applicable_as_none(interaction_flops(&p))?,
                storage_formula: scheme.storage_formula().map(str::to_string),
                storage_scalars: not_applicable_as_none(storage_per_item(&p))?,
            })
        })
        .collect()
}

fn not_applicable_as_none(r: Result<u64>) -> Result<Option<u64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NotApplicable(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn cost_table_csv(rows: &[CostRow]) -> String {
    let opt = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
    let mut out =
        String::from("scheme,interaction_formula,interaction_flops,storage_formula,storage_scalars\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.scheme,
            r.interaction_formula.as_deref().unwrap_or("-"),
            opt(r.interaction_flops),
            r.storage_formula.as_deref().unwrap_or("-"),
            opt(r.storage_scalars)
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub queries: usize,
    pub repetitions: usize,
    pub candidates_per_query: f64,
    /// Mean wall-clock milliseconds per query (interaction plus sorting).
    pub per_query_ms: f64,
    /// `per_query_ms / candidates_per_query`; absent when there are no
    /// candidates.
    pub per_candidate_ms: Option<f64>,
    /// Per-query mean of each timed repetition.
    pub repetition_ms: Vec<f64>,
    /// Same workload with queries spread over the worker pool, when requested.
    pub parallel_per_query_ms: Option<f64>,
}

pub const MIN_REPETITIONS: usize = 3;

/// Times `index.query` for every query. One untimed warm-up pass precedes
/// `repetitions` timed passes, all on a single worker thread.
pub fn measure_latency(
    index: &HybridIndex,
    queries: &[HybridEntry],
    cfg: &ScoringConfig,
    top_n: usize,
    repetitions: usize,
    parallel: bool,
) -> Result<LatencyReport> {
    if queries.is_empty() {
        return Err(Error::Invalid("latency measurement needs at least one query".into()));
    }
    if repetitions < MIN_REPETITIONS {
        return Err(Error::Config(format!(
            "latency measurement needs at least {MIN_REPETITIONS} repetitions"
        )));
    }
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let run_all = || -> Result<()> {
        for q in queries {
            std::hint::black_box(index.query(q, cfg, top_n)?);
        }
        Ok(())
    };
    let repetition_ms = single.install(|| -> Result<Vec<f64>> {
        run_all()?;
        let mut out = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let start = Instant::now();
            run_all()?;
            out.push(start.elapsed().as_secs_f64() * 1e3 / queries.len() as f64);
        }
        Ok(out)
    })?;
    let per_query_ms = repetition_ms.iter().sum::<f64>() / repetitions as f64;
    let candidates = index.len() as f64;
    let parallel_per_query_ms = if parallel {
        let start = Instant::now();
        for _ in 0..repetitions {
            queries
                .par_iter()
                .map(|q| index.query(q, cfg, top_n).map(std::hint::black_box))
                .collect::<Result<Vec<_>>>()?;
        }
        Some(start.elapsed().as_secs_f64() * 1e3 / (repetitions * queries.len()) as f64)
    } else {
        None
    };
    Ok(LatencyReport {
        queries: queries.len(),
        repetitions,
        candidates_per_query: candidates,
        per_query_ms,
        per_candidate_ms: (candidates > 0.0).then(|| per_query_ms / candidates),
        repetition_ms,
        parallel_per_query_ms,
    })
}
