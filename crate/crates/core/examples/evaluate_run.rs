//! Score a TREC run against relevance judgments.
//!
//! Run with `cargo run --example evaluate_run`.

use hybridrank::eval::{evaluate, report_csv};
use hybridrank::io::{parse_qrels, parse_run};

const RUN: &str = "\
q1 Q0 d3 1 0.91 demo
q1 Q0 d1 2 0.80 demo
q1 Q0 d7 3 0.42 demo
q2 Q0 d2 1 0.77 demo
q2 Q0 d9 2 0.60 demo
q2 Q0 d4 3 0.58 demo
q2 Q0 d5 4 0.12 demo
q3 Q0 d8 1 0.50 demo
";

const QRELS: &str = "\
q1 0 d1 1
q1 0 d3 0
q2 0 d4 1
q2 0 d5 1
q3 0 d6 0
q4 0 d1 1
";

fn main() -> hybridrank::Result<()> {
    let report = evaluate(&parse_run(RUN)?, &parse_qrels(QRELS)?)?;
    print!("{}", report_csv(&report));
    println!("evaluated {} queries", report.evaluated);
    println!("no relevant candidates: {:?}", report.no_relevant);
    println!("judged but not ranked: {:?}", report.missing_run);
    Ok(())
}
