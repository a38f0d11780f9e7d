//! Interaction cost and per-item storage of the ranking schemes, plus a
//! measured latency for the hybrid ranker.
//!
//! Run with `cargo run --release --example cost_model`.

use hybridrank::index::HybridIndex;
use hybridrank::resources::{cost_table, cost_table_csv, measure_latency};
use hybridrank::{DenseRep, HybridEntry, ScoringConfig, SourceTag, SparseRep};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> hybridrank::Result<()> {
    print!("{}", cost_table_csv(&cost_table(768, 128, 128)?));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut make = |id: String| {
        let dense = DenseRep::new((0..768).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let pairs: Vec<(u32, f32)> = sample(&mut rng, 30_522, 128)
            .into_iter()
            .map(|t| (t as u32, 1.0))
            .collect();
        HybridEntry::new(id, SourceTag::Other, dense, SparseRep::from_pairs(pairs, 128).unwrap())
    };
    let index = HybridIndex::build((0..2000).map(|i| make(format!("c{i}"))).collect())?;
    let queries: Vec<_> = (0..10).map(|i| make(format!("q{i}"))).collect();
    let report = measure_latency(&index, &queries, &ScoringConfig::default(), 10, 5, true)?;
    println!(
        "\n{} candidates: {:.3} ms per query, {:.6} ms per candidate, {:.3} ms per query with parallel queries",
        report.candidates_per_query,
        report.per_query_ms,
        report.per_candidate_ms.unwrap_or(f64::NAN),
        report.parallel_per_query_ms.unwrap_or(f64::NAN)
    );
    Ok(())
}
