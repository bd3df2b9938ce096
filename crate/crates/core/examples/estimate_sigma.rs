//! Estimate the asymptotic covariance of a bivariate chain with every
//! estimator family and report Monte Carlo standard errors.
//!
//! cargo run --release --example estimate_sigma

use mcse::diagnostics::mcse;
use mcse::experiments::stream_rng;
use mcse::{mean_vector, EstimatorSpec, LagWindow, LugsailConfig, Method, SampleMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> mcse::Result<()> {
    // x_t = 0.8 x_{t-1} + e_t,  y_t = 0.5 y_{t-1} + 0.3 x_t + u_t
    let mut rng = stream_rng(1, 0);
    let (mut x, mut y) = (0.0, 0.0);
    let rows: Vec<Vec<f64>> = (0..50_000)
        .map(|_| {
            x = 0.8 * x + rng.sample::<f64, _>(StandardNormal);
            y = 0.5 * y + 0.3 * x + rng.sample::<f64, _>(StandardNormal);
            vec![x, y]
        })
        .collect();
    let s = SampleMatrix::from_rows(&rows)?;
    println!("mean = {:.4?}", mean_vector(&s).as_slice());

    let specs = [
        ("batch means", EstimatorSpec::batch_means()),
        ("overlapping BM", EstimatorSpec::new(Method::OverlappingBatchMeans)),
        ("lugsail BM (zero)", EstimatorSpec::batch_means().with_lugsail(LugsailConfig::zero())),
        ("SV Bartlett", EstimatorSpec::new(Method::Spectral(LagWindow::Bartlett))),
        ("SV Tukey-Hanning", EstimatorSpec::new(Method::Spectral(LagWindow::TukeyHanning))),
        ("initial sequence", EstimatorSpec::new(Method::InitialSequence { adjusted: false })),
        ("adjusted init. seq.", EstimatorSpec::new(Method::InitialSequence { adjusted: true })),
    ];
    for (name, spec) in specs {
        let est = spec.estimate(&s)?;
        let se = mcse(&est, s.n())?;
        println!(
            "{name:<20} Σ = [{:8.3} {:8.3}; {:8.3} {:8.3}]  mcse = [{:.4} {:.4}]",
            est.sigma[(0, 0)],
            est.sigma[(0, 1)],
            est.sigma[(1, 0)],
            est.sigma[(1, 1)],
            se[0],
            se[1]
        );
    }
    Ok(())
}
