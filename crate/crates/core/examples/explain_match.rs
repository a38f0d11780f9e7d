//! Show which vocabulary terms carry the lexical match between a query and
//! a candidate, including expansion terms absent from either text.
//!
//! Run with `cargo run --example explain_match`.

use hybridrank::explain::{match_report, render, RenderFormat, Vocabulary};
use hybridrank::{DenseRep, HybridEntry, SourceTag, SparseRep};

fn main() -> hybridrank::Result<()> {
    let vocab: Vocabulary = ["car", "fast", "speed", "mph", "go", "vehicle", "top"]
        .iter()
        .enumerate()
        .map(|(i, t)| (i as u32, t.to_string()))
        .collect();
    let tokens = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    let query = HybridEntry::new(
        "q",
        SourceTag::Other,
        DenseRep::new(vec![0.3, 0.9])?,
        SparseRep::from_unbounded([(0, 1.1), (1, 1.6), (2, 0.9), (4, 0.4), (5, 0.3)])?,
    )
    .with_tokens(tokens("how fast does the car go"));
    let review = HybridEntry::new(
        "r17",
        SourceTag::Review,
        DenseRep::new(vec![0.4, 0.8])?,
        SparseRep::from_unbounded([(0, 0.7), (2, 1.9), (3, 1.2), (5, 0.6), (6, 0.5)])?,
    )
    .with_tokens(tokens("top speed around 120 mph on the highway"));

    let report = match_report(&query, &review, &vocab, 0.5)?;
    print!("{}", render(&report, RenderFormat::Text)?);
    let html = render(&report, RenderFormat::Html)?;
    println!("html report: {} bytes", html.len());
    Ok(())
}
