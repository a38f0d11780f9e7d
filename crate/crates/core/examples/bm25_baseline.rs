//! Normalize noisy product text and rank it with BM25.
//!
//! Run with `cargo run --example bm25_baseline`.

use hybridrank::bm25::{bm25_rank, normalize, Bm25Corpus, Bm25Params, Document, NormalizationRules};
use hybridrank::SourceTag;

fn main() -> hybridrank::Result<()> {
    let rules = NormalizationRules::default();
    for raw in [
        "3'' l x 4'' w",
        r#"{"color": "Navy", "size": {"waist": 32, "length": 30}}"#,
        "Crème brûlée torch, 12 oz & 25% off",
    ] {
        println!("{raw:50} -> {}", normalize(raw, &rules)?);
    }

    let docs = [
        ("d1", SourceTag::Attribute, r#"{"material": "cotton", "fit": "slim"}"#),
        ("d2", SourceTag::Review, "Runs small, the cotton shrinks after washing"),
        ("d3", SourceTag::Description, "Slim fit shirt in organic cotton, 2'' cuffs"),
        ("d4", SourceTag::Cqa, "Is it machine washable? Yes, cold water"),
    ]
    .map(|(id, source, text)| Document {
        id: id.into(),
        source,
        text: text.into(),
    });
    let corpus = Bm25Corpus::build(&docs, &rules)?;
    for query in ["slim cotton", "does it shrink when washing"] {
        let ranked = bm25_rank(query, &corpus, Bm25Params::default())?;
        let line: Vec<String> = ranked.iter().map(|c| format!("{} {:.3}", c.candidate_id, c.combined)).collect();
        println!("{query:28} {}", line.join("  "));
    }
    Ok(())
}
