//! Output-analysis quantities built on an estimate of Σ: Monte Carlo
//! standard errors, the confidence ellipsoid and its volume, multivariate
//! effective sample size, and the fixed-volume stopping rule.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::chain::{sample_covariance, SampleMatrix};
use crate::error::{Error, Result};
use crate::estimate::LrvEstimate;
use crate::linalg::{sqrt_psd, Cholesky};

/// Per-component standard errors `sqrt(Σ_jj / n)`.
pub fn mcse(sigma: &LrvEstimate, n: usize) -> Result<DVector<f64>> {
    mcse_from_matrix(&sigma.sigma, n)
}

pub fn mcse_from_matrix(sigma: &DMatrix<f64>, n: usize) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(sigma.nrows());
    for j in 0..sigma.nrows() {
        let v = sigma[(j, j)];
        if v < 0.0 {
            return Err(Error::NegativeVariance { component: j, value: v });
        }
        out[j] = (v / n as f64).sqrt();
    }
    Ok(out)
}

/// `diag(B)/√n` with `B` the symmetric square root of Σ. Differs from
/// [`mcse`] whenever Σ has off-diagonal mass; provided for comparison.
pub fn mcse_sqrt_matrix(sigma: &LrvEstimate, n: usize) -> Result<DVector<f64>> {
    let chol = Cholesky::new(&sigma.sigma);
    if chol.is_none() && !sigma.psd {
        return Err(Error::NotPositiveDefinite("sigma is not positive semidefinite".into()));
    }
    let b = sqrt_psd(&sigma.sigma);
    Ok(b.diagonal() / (n as f64).sqrt())
}

/// Chi-square quantile by safeguarded Newton iteration on the regularised
/// lower incomplete gamma function.
pub fn chi2_quantile(prob: f64, df: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidParameter(format!("probability {prob} must lie in (0, 1)")));
    }
    if !(df >= 1.0) || !df.is_finite() {
        return Err(Error::InvalidParameter(format!("degrees of freedom {df} must be >= 1")));
    }
    let k = df / 2.0;
    let cdf = |x: f64| gamma_lr(k, x / 2.0);
    let log_norm = k * 2f64.ln() + ln_gamma(k);
    let pdf = |x: f64| ((k - 1.0) * x.ln() - x / 2.0 - log_norm).exp();

    let mut lo = 0.0;
    let mut hi = df.max(1.0);
    while cdf(hi) < prob {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = cdf(x) - prob;
        if f.abs() < 1e-15 {
            break;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = pdf(x);
        let newton = x - f / d;
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-14 * hi {
            break;
        }
    }
    Ok(x)
}

fn chol_or_err(m: &DMatrix<f64>, what: &str) -> Result<Cholesky> {
    Cholesky::new(m).ok_or_else(|| Error::NotPositiveDefinite(what.into()))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

/// `log(2π^{p/2} / (p Γ(p/2)))`, the log volume of the unit `p`-ball.
fn log_unit_ball(p: f64) -> f64 {
    2f64.ln() + 0.5 * p * PI.ln() - p.ln() - ln_gamma(p / 2.0)
}

/// Volume of the `100(1−α)%` confidence ellipsoid for the mean.
pub fn region_volume(sigma: &LrvEstimate, n: usize, alpha: f64) -> Result<f64> {
    Ok(log_region_volume(&sigma.sigma, n, alpha)?.exp())
}

fn log_region_volume(sigma: &DMatrix<f64>, n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let p = sigma.nrows() as f64;
    let chol = chol_or_err(sigma, "sigma")?;
    let crit = chi2_quantile(1.0 - alpha, p)?;
    Ok(log_unit_ball(p) + 0.5 * p * (crit / n as f64).ln() + 0.5 * chol.log_det())
}

/// `n (θ̄ − θ₀)ᵀ Σ⁻¹ (θ̄ − θ₀)`.
pub fn region_statistic(
    theta0: &DVector<f64>,
    theta_bar: &DVector<f64>,
    sigma: &LrvEstimate,
    n: usize,
) -> Result<f64> {
    if theta0.len() != sigma.dim() || theta_bar.len() != sigma.dim() {
        return Err(Error::InvalidParameter("vector length does not match sigma".into()));
    }
    let chol = chol_or_err(&sigma.sigma, "sigma")?;
    Ok(n as f64 * chol.inverse_quadratic(&(theta_bar - theta0)))
}

/// Whether `theta0` lies inside the confidence ellipsoid around `theta_bar`.
pub fn region_contains(
    theta0: &DVector<f64>,
    theta_bar: &DVector<f64>,
    sigma: &LrvEstimate,
    n: usize,
    alpha: f64,
) -> Result<bool> {
    check_alpha(alpha)?;
    let stat = region_statistic(theta0, theta_bar, sigma, n)?;
    Ok(stat < chi2_quantile(1.0 - alpha, sigma.dim() as f64)?)
}

/// Estimated multivariate ESS `n (|Λ_n| / |Σ_n|)^{1/p}`.
pub fn ess(s: &SampleMatrix, sigma: &LrvEstimate) -> Result<f64> {
    ess_from_matrices(&sample_covariance(s), &sigma.sigma, s.n())
}

pub fn ess_from_matrices(lambda: &DMatrix<f64>, sigma: &DMatrix<f64>, n: usize) -> Result<f64> {
    let p = sigma.nrows() as f64;
    let l = chol_or_err(lambda, "sample covariance")?;
    let s = chol_or_err(sigma, "sigma")?;
    Ok(n as f64 * ((l.log_det() - s.log_det()) / p).exp())
}

/// The ESS threshold `M_{α,ε,p}` before rounding.
pub fn min_ess_exact(alpha: f64, epsilon: f64, p: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if !(epsilon > 0.0) || p == 0 {
        return Err(Error::InvalidParameter("need epsilon > 0 and p >= 1".into()));
    }
    let pf = p as f64;
    let crit = chi2_quantile(1.0 - alpha, pf)?;
    let log_m = (2.0 / pf) * 2f64.ln() + PI.ln()
        - (2.0 / pf) * (pf.ln() + ln_gamma(pf / 2.0))
        - 2.0 * epsilon.ln()
        + crit.ln();
    Ok(log_m.exp())
}

/// `M_{α,ε,p}` rounded to the nearest integer.
pub fn min_ess(alpha: f64, epsilon: f64, p: usize) -> Result<u64> {
    Ok(min_ess_exact(alpha, epsilon, p)?.round() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingConfig {
    pub alpha: f64,
    pub epsilon: f64,
    /// Minimum simulation size; no termination at or below it.
    pub n_star: u64,
}

impl StoppingConfig {
    pub fn new(alpha: f64, epsilon: f64, n_star: u64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
        }
        if n_star < 1 {
            return Err(Error::InvalidParameter("n_star must be at least 1".into()));
        }
        Ok(Self { alpha, epsilon, n_star })
    }

    /// Uses `min_ess(alpha, epsilon, p)` as the minimum simulation size.
    pub fn with_default_n_star(alpha: f64, epsilon: f64, p: usize) -> Result<Self> {
        Self::new(alpha, epsilon, min_ess(alpha, epsilon, p)?.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingDecision {
    pub terminate: bool,
    pub n: usize,
    /// `Vol(C_α(n))^{1/p} + 1/n`
    pub lhs: f64,
    /// `ε |Λ_n|^{1/(2p)}`
    pub rhs: f64,
    pub ess: f64,
    pub min_ess: f64,
}

/// Fixed-volume rule: terminate once `n > n*` and
/// `Vol(C_α(n))^{1/p} + 1/n < ε |Λ_n|^{1/(2p)}`.
pub fn fixed_volume_check(
    s: &SampleMatrix,
    sigma: &LrvEstimate,
    config: &StoppingConfig,
) -> Result<StoppingDecision> {
    fixed_volume_from_matrices(&sample_covariance(s), &sigma.sigma, s.n(), config)
}

pub fn fixed_volume_from_matrices(
    lambda: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    n: usize,
    config: &StoppingConfig,
) -> Result<StoppingDecision> {
    let p = sigma.nrows() as f64;
    let lambda_chol = chol_or_err(lambda, "sample covariance")?;
    let log_vol = log_region_volume(sigma, n, config.alpha)?;
    let lhs = (log_vol / p).exp() + 1.0 / n as f64;
    let rhs = config.epsilon * (lambda_chol.log_det() / (2.0 * p)).exp();
    let ess = ess_from_matrices(lambda, sigma, n)?;
    let min_ess = min_ess_exact(config.alpha, config.epsilon, sigma.nrows())?;
    Ok(StoppingDecision {
        terminate: n as u64 > config.n_star && lhs < rhs,
        n,
        lhs,
        rhs,
        ess,
        min_ess,
    })
}
