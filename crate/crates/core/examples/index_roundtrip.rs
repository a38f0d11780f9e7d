//! Build an inverted index, query it, and persist it to disk.
//!
//! Run with `cargo run --release --example index_roundtrip`.

use std::time::Instant;

use hybridrank::index::HybridIndex;
use hybridrank::{DenseRep, HybridEntry, ScoringConfig, SourceTag, SparseRep};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_entry(rng: &mut ChaCha8Rng, id: String) -> HybridEntry {
    let dense = DenseRep::new((0..256).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let sparse = SparseRep::from_pairs(
        sample(rng, 30_522, 64).into_iter().map(|t| (t as u32, rng.random_range(0.01..3.0))),
        64,
    )
    .unwrap();
    let source = SourceTag::ALL[rng.random_range(0..SourceTag::ALL.len())];
    HybridEntry::new(id, source, dense, sparse)
}

fn main() -> hybridrank::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let entries: Vec<_> = (0..5000).map(|i| random_entry(&mut rng, format!("doc-{i:04}"))).collect();
    let index = HybridIndex::build(entries)?;
    let postings: usize = index.postings().values().map(Vec::len).sum();
    println!("{} entries, {} posting lists, {postings} postings", index.len(), index.postings().len());

    let query = random_entry(&mut rng, "query".into());
    let start = Instant::now();
    let top = index.query(&query, &ScoringConfig::default(), 5)?;
    println!("top 5 in {:.2?}:", start.elapsed());
    for c in &top {
        println!("  {} {:.4} [{}]", c.candidate_id, c.combined, c.source);
    }
    let reviews = index.query_filtered(&query, &ScoringConfig::default(), 3, Some(&[SourceTag::Review]))?;
    println!("best reviews: {:?}", reviews.iter().map(|c| &c.candidate_id).collect::<Vec<_>>());

    let dir = tempfile::tempdir().map_err(|e| hybridrank::Error::Invalid(e.to_string()))?;
    let path = dir.path().join("demo.hrix");
    index.save(&path)?;
    let loaded = HybridIndex::load(&path)?;
    println!(
        "saved {} bytes; reloaded index identical: {}",
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        loaded == index
    );
    Ok(())
}
