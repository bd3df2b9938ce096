//! Multivariate effective sample size of AR(1) chains against the analytic
//! value, for plain and lugsail batch means.
//!
//! cargo run --release --example multivariate_ess

use mcse::diagnostics::ess;
use mcse::experiments::{ar1_truth, ChainGenerator};
use mcse::{BatchRule, EstimatorSpec, LugsailConfig};

fn main() -> mcse::Result<()> {
    let n = 100_000;
    for phi in [0.0, 0.5, 0.9] {
        let s = ChainGenerator::ar1(phi).generate(n, 11, 0)?;
        let truth = ar1_truth(phi)?.ess_ratio;
        let bm = EstimatorSpec::batch_means().with_rule(BatchRule::SquareRoot);
        let over = bm.clone().with_lugsail(LugsailConfig::over());
        println!(
            "φ = {phi:.1}: true ESS/n = {truth:.4}  bm {:.4}  lugsail-over {:.4}",
            ess(&s, &bm.estimate(&s)?)? / n as f64,
            ess(&s, &over.estimate(&s)?)? / n as f64
        );
    }
    Ok(())
}
