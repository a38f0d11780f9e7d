//! Turn masked-language-model logits into a sparse lexical representation.
//!
//! Run with `cargo run --example encode_logits`.

use hybridrank::repr::{aggregate, saturate};
use hybridrank::{encode, Aggregation, EncodeConfig, LogitMatrix};

fn main() -> hybridrank::Result<()> {
    // Three input tokens over a toy vocabulary of six terms.
    let vocab = ["car", "fast", "speed", "go", "red", "the"];
    let logits = LogitMatrix::from_rows(&[
        vec![2.1, -0.4, 0.9, -3.0, -1.0, 0.2],
        vec![0.3, 3.2, 1.8, -0.5, -2.2, -0.1],
        vec![-1.0, 0.4, 0.1, 1.5, -0.3, -4.0],
    ])?;

    for mode in [Aggregation::Max, Aggregation::Sum] {
        let weights = aggregate(&saturate(&logits), mode);
        println!("{mode} pooled weights: {:?}", weights.as_slice());
        let rep = encode(&logits, &EncodeConfig::new(3, mode)?)?;
        let terms: Vec<String> = rep
            .entries()
            .iter()
            .map(|&(id, w)| format!("{}={w:.3}", vocab[id as usize]))
            .collect();
        println!("{mode} top-3: {}", terms.join(" "));
    }
    Ok(())
}
