//! A small replication study: coverage of 95% intervals for the mean of an
//! AR(1) chain with φ = 0.95 under plain and lugsail batch means.
//!
//! cargo run --release --example ar1_coverage

use mcse::experiments::{ar1_estimator_grid, coverage_study, ChainGenerator, StudyConfig};

fn main() -> mcse::Result<()> {
    let cfg = StudyConfig::new(ChainGenerator::ar1(0.95), ar1_estimator_grid(), vec![1000, 10_000], 500, 42);
    println!("{:<8} {:>6} {:>9} {:>8} {:>10}", "method", "n", "coverage", "se", "mean Σ");
    for row in coverage_study(&cfg)? {
        println!(
            "{:<8} {:>6} {:>9.3} {:>8.3} {:>10.2}",
            row.estimator, row.n, row.coverage, row.std_error, row.mean_sigma
        );
    }
    println!("true Σ = {:.0}", 1.0 / (1.0f64 - 0.95).powi(2));
    Ok(())
}
