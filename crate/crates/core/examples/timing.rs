//! Relative cost of the estimator families on a Bayesian logistic
//! regression chain.
//!
//! cargo run --release --example timing

use mcse::experiments::{logistic_mh_generate, timing_bench, timing_estimator_grid};

fn main() -> mcse::Result<()> {
    let s = logistic_mh_generate(500, 10, 50_000, 1)?;
    println!("chain: n = {}, p = {}", s.n(), s.p());
    for row in timing_bench(&s, &timing_estimator_grid(), 5)? {
        println!("{:<12} median {:>10.3} ms", row.estimator, row.median_secs * 1e3);
    }
    Ok(())
}
