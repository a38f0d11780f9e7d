//! Hybrid sparse-dense ranking.
//!
//! Texts are represented twice: a dense summary vector and an
//! expansion-aware sparse vector over the vocabulary obtained by
//! log-saturating, pooling and top-k pruning masked-language-model logits
//! ([`repr`]). Candidates are ranked by an `alpha`-weighted sum of the two
//! inner products ([`scoring`], [`index`]), evaluated with standard IR
//! metrics and significance tests ([`eval`]), explained token by token
//! ([`explain`]) and compared with a BM25 baseline ([`bm25`]) and an
//! analytical cost model ([`resources`]).

pub mod bm25;
pub mod commands;
pub mod error;
pub mod eval;
pub mod explain;
pub mod index;
pub mod io;
pub mod losses;
pub mod repr;
pub mod resources;
pub mod scoring;

pub use error::{Error, Result};
pub use index::{HybridEntry, HybridIndex};
pub use repr::{encode, Aggregation, DenseRep, EncodeConfig, LogitMatrix, SparseRep};
pub use scoring::{rank, ScoredCandidate, ScoringConfig, SourceTag};
