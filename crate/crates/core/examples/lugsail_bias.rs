//! Exact finite-sample bias of (lugsail) batch means on an AR(1) chain,
//! compared with a quick Monte Carlo average.
//!
//! cargo run --release --example lugsail_bias

use mcse::batch::{bm_exact_bias_ar1, lugsail_batch_means, lugsail_bm_exact_bias_ar1};
use mcse::experiments::{ar1_truth, ChainGenerator};
use mcse::LugsailConfig;

fn main() -> mcse::Result<()> {
    // b is divisible by both ratios so every batch size divides n
    let (phi, n, b) = (0.9, 12_000, 120);
    let truth = ar1_truth(phi)?;
    println!("φ = {phi}, n = {n}, b = {b}: true σ² = {:.2}, Γ/b = {:.2}", truth.sigma_true, truth.gamma / b as f64);

    let exact_bm = bm_exact_bias_ar1(phi, n, b)?;
    let exact_zero = lugsail_bm_exact_bias_ar1(phi, n, b, 2.0, 0.5)?;
    let exact_over = lugsail_bm_exact_bias_ar1(phi, n, b, 3.0, 0.5)?;

    let generator = ChainGenerator::Ar1 { phi, start: mcse::experiments::Ar1Start::Stationary };
    let reps = 300;
    let mut sums = [0.0; 3];
    for rep in 0..reps {
        let s = generator.generate(n, 7, rep)?;
        for (k, cfg) in [LugsailConfig::none(), LugsailConfig::zero(), LugsailConfig::over()].iter().enumerate() {
            sums[k] += lugsail_batch_means(&s, b, cfg)?.scalar() - truth.sigma_true;
        }
    }
    for (name, exact, mc) in [("bm", exact_bm, sums[0]), ("zero", exact_zero, sums[1]), ("over", exact_over, sums[2])] {
        println!("{name:<5} exact bias {exact:8.3}   Monte Carlo {:8.3}", mc / reps as f64);
    }
    Ok(())
}
