//! Re-rank with per-source confidence: normalize both score components per
//! query, blend, then multiply by the prior of each candidate's source.
//!
//! Run with `cargo run --example source_priors`.

use std::collections::HashMap;

use hybridrank::eval::{evaluate_by_source, hit_rate_priors, Qrels, RankedRun};
use hybridrank::scoring::source_aware_rescale;
use hybridrank::{rank, DenseRep, HybridEntry, ScoringConfig, SourceTag, SparseRep};

fn entry(id: &str, source: SourceTag, d: [f32; 2], s: &[(u32, f32)]) -> HybridEntry {
    HybridEntry::new(id, source, DenseRep::new(d.to_vec()).unwrap(), SparseRep::from_unbounded(s.iter().copied()).unwrap())
}

fn main() -> hybridrank::Result<()> {
    let query = entry("q", SourceTag::Other, [1.0, 0.2], &[(1, 1.0), (2, 0.5)]);
    let candidates = [
        entry("review-1", SourceTag::Review, [0.9, 0.3], &[(1, 1.4)]),
        entry("cqa-1", SourceTag::Cqa, [0.8, 0.1], &[(1, 1.1), (2, 0.8)]),
        entry("osp-1", SourceTag::Osp, [1.0, 0.4], &[(2, 0.3)]),
        entry("attr-1", SourceTag::Attribute, [0.4, 0.9], &[(1, 0.2)]),
    ];
    let raw = rank(&query, &candidates, &ScoringConfig::new(0.5)?)?;
    println!("raw:    {:?}", raw.iter().map(|c| &c.candidate_id).collect::<Vec<_>>());

    // Priors from how often each source placed a relevant item in the top 5.
    let mut run = RankedRun::default();
    run.insert_ranked("q", &raw)?;
    let qrels = Qrels::from_relevant([("q", "cqa-1"), ("q", "attr-1")]);
    let sources: HashMap<String, SourceTag> = candidates.iter().map(|c| (c.id.clone(), c.source)).collect();
    let priors = hit_rate_priors(&evaluate_by_source(&run, &qrels, &sources), SourceTag::ALL, 0.05);
    println!("priors: {priors:?}");

    let cfg = ScoringConfig::new(0.5)?.with_priors(priors)?;
    let scaled = source_aware_rescale(raw, &cfg)?;
    for c in &scaled {
        println!("  {:9} combined {:.3} (dense {:.3}, lexical {:.3})", c.candidate_id, c.combined, c.dense_score, c.lexical_score);
    }
    Ok(())
}
