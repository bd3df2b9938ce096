//! The multivariate initial-sequence scan: where it starts, where it stops
//! and how the log-determinant grows along the way.
//!
//! cargo run --release --example initial_sequence

use mcse::experiments::stream_rng;
use mcse::initseq::{adjusted_initial_sequence, initial_sequence};
use mcse::SampleMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> mcse::Result<()> {
    let mut rng = stream_rng(3, 0);
    let (mut x, mut y) = (0.0, 0.0);
    let rows: Vec<Vec<f64>> = (0..100_000)
        .map(|_| {
            x = 0.95 * x + rng.sample::<f64, _>(StandardNormal);
            y = -0.5 * y + 0.2 * x + rng.sample::<f64, _>(StandardNormal);
            vec![x, y]
        })
        .collect();
    let s = SampleMatrix::from_rows(&rows)?;

    let r = initial_sequence(&s)?;
    println!("scan starts at s_n = {}, stops at t_n = {}", r.s_n, r.t_n);
    let step = (r.logdet_path.len() / 8).max(1);
    for (i, ld) in r.logdet_path.iter().enumerate().step_by(step) {
        println!("  m = {:4}  log|Σ_m| = {ld:.4}", r.s_n + i);
    }
    println!("unadjusted Σ = {:.3}", r.sigma);
    let adj = adjusted_initial_sequence(&s)?;
    println!("adjusted   Σ = {:.3}", adj.sigma);
    Ok(())
}
