//! Compare two systems query by query with a randomization test and a
//! paired t-test.
//!
//! Run with `cargo run --release --example significance`.

use hybridrank::eval::{fisher_randomization, paired_t_test, DEFAULT_ITERATIONS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> hybridrank::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let baseline: Vec<f64> = (0..50).map(|_| rng.random_range(0.2..0.8)).collect();
    for lift in [0.0, 0.02, 0.1] {
        let system: Vec<f64> = baseline
            .iter()
            .map(|b| (b + lift + rng.random_range(-0.05..0.05)).clamp(0.0, 1.0))
            .collect();
        let fisher = fisher_randomization(&system, &baseline, DEFAULT_ITERATIONS, 42)?;
        let t = paired_t_test(&system, &baseline)?;
        println!(
            "mean lift {lift:.2}: Fisher p = {fisher:.4}, t = {:.3}, t-test p = {:.4}",
            t.t_statistic, t.p_value
        );
    }
    Ok(())
}
