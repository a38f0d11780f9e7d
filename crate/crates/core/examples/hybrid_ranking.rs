//! Rank candidates by a blend of dense and sparse inner products, and see how
//! the blend weight changes the order.
//!
//! Run with `cargo run --example hybrid_ranking`.

use hybridrank::{rank, DenseRep, HybridEntry, ScoringConfig, SourceTag, SparseRep};

fn entry(id: &str, dense: &[f32], sparse: &[(u32, f32)]) -> HybridEntry {
    HybridEntry::new(
        id,
        SourceTag::Other,
        DenseRep::new(dense.to_vec()).unwrap(),
        SparseRep::from_unbounded(sparse.iter().copied()).unwrap(),
    )
}

fn main() -> hybridrank::Result<()> {
    let query = entry("q", &[0.6, 0.8, 0.0], &[(3, 1.2), (7, 0.9)]);
    let candidates = [
        entry("semantic", &[0.6, 0.7, 0.1], &[(11, 1.0)]),
        entry("lexical", &[0.0, 0.2, 0.9], &[(3, 1.5), (7, 1.4)]),
        entry("both", &[0.5, 0.6, 0.2], &[(3, 0.8)]),
    ];
    for alpha in [0.0, 0.5, 1.0] {
        let ranked = rank(&query, &candidates, &ScoringConfig::new(alpha)?)?;
        let line: Vec<String> = ranked
            .iter()
            .map(|c| format!("{} {:.3} (dense {:.3}, lexical {:.3})", c.candidate_id, c.combined, c.dense_score, c.lexical_score))
            .collect();
        println!("alpha {alpha:.1}: {}", line.join(" | "));
    }
    Ok(())
}
