//! Multivariate normal rectangle probabilities by randomised lattice rules.
//!
//! cargo run --release --example mvn_probability

use mcse::mvn::{mvn_rect_prob, MvnOptions};
use nalgebra::{DMatrix, DVector};

fn main() -> mcse::Result<()> {
    let rho: f64 = 0.5;
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
    let orthant = mvn_rect_prob(&DVector::zeros(2), &cov, &[(0.0, f64::INFINITY); 2], &MvnOptions::default())?;
    let exact = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
    println!("P(X > 0), ρ = {rho}: {:.6} ± {:.1e} (exact {exact:.6})", orthant.prob, orthant.std_error);

    let p = 5;
    let equi = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { 0.3 });
    for z in [1.96, 2.3, 2.6] {
        let r = mvn_rect_prob(&DVector::zeros(p), &equi, &vec![(-z, z); p], &MvnOptions::default().with_tol(1e-4))?;
        println!("P(|X_i| < {z}, i ≤ {p}) = {:.5} ± {:.1e}  ({} evaluations)", r.prob, r.std_error, r.evaluations);
    }
    Ok(())
}
