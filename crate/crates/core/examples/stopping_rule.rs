//! Sequential fixed-volume stopping: extend a chain in chunks until the
//! confidence region is small relative to the target's spread.
//!
//! cargo run --release --example stopping_rule

use mcse::diagnostics::{fixed_volume_check, min_ess};
use mcse::experiments::stream_rng;
use mcse::{EstimatorSpec, SampleMatrix, StoppingConfig};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> mcse::Result<()> {
    let (alpha, eps, p) = (0.05, 0.05, 3);
    println!("minimum ESS for α = {alpha}, ε = {eps}, p = {p}: {}", min_ess(alpha, eps, p)?);
    let cfg = StoppingConfig::with_default_n_star(alpha, eps, p)?;

    let mut rng = stream_rng(5, 0);
    let mut state = [0.0; 3];
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let spec = EstimatorSpec::batch_means();
    loop {
        for _ in 0..10_000 {
            for (j, phi) in [0.9, 0.5, 0.0].iter().enumerate() {
                state[j] = phi * state[j] + rng.sample::<f64, _>(StandardNormal);
            }
            rows.push(state.to_vec());
        }
        let s = SampleMatrix::from_rows(&rows)?;
        let d = fixed_volume_check(&s, &spec.estimate(&s)?, &cfg)?;
        println!("n = {:7}  lhs = {:.4}  rhs = {:.4}  ESS = {:8.0}", d.n, d.lhs, d.rhs, d.ess);
        if d.terminate {
            println!("terminate: ESS {:.0} ≥ {:.0}", d.ess, d.min_ess);
            return Ok(());
        }
    }
}
