//! Quantile estimates, the joint long-run covariance of mixed mean and
//! quantile targets, and simultaneous hyperrectangular confidence regions.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::batch::LugsailConfig;
use crate::chain::SampleMatrix;
use crate::error::{Error, Result};
use crate::estimate::{EstimatorSpec, MethodInfo};
use crate::mvn::{mvn_rect_prob, MvnOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetKind {
    Mean,
    Quantile { q: f64 },
}

/// One estimand: the mean or a quantile of a column of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    #[serde(flatten)]
    pub kind: TargetKind,
    pub component: usize,
}

impl TargetSpec {
    pub fn mean(component: usize) -> Self {
        Self { kind: TargetKind::Mean, component }
    }

    pub fn quantile(component: usize, q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("quantile level {q} must lie in (0, 1)")));
        }
        Ok(Self { kind: TargetKind::Quantile { q }, component })
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TargetKind::Mean => write!(f, "mean:{}", self.component),
            TargetKind::Quantile { q } => write!(f, "quant:{}:{}", self.component, q),
        }
    }
}

/// Parses `mean:<col>` or `quant:<col>:<q>`.
impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("malformed target '{s}'"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["mean", col] => Ok(Self::mean(col.parse().map_err(|_| bad())?)),
            ["quant", col, q] => Self::quantile(
                col.parse().map_err(|_| bad())?,
                q.parse().map_err(|_| bad())?,
            ),
            _ => Err(bad()),
        }
    }
}

/// Parses a comma-separated list of targets.
pub fn parse_targets(s: &str) -> Result<Vec<TargetSpec>> {
    let targets = s
        .split(',')
        .map(str::parse)
        .collect::<Result<Vec<TargetSpec>>>()?;
    if targets.is_empty() {
        return Err(Error::InvalidParameter("no targets given".into()));
    }
    Ok(targets)
}

/// Point estimates `ν̂` and their joint long-run covariance `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointEstimate {
    pub targets: Vec<TargetSpec>,
    pub nu_hat: DVector<f64>,
    pub omega: DMatrix<f64>,
    pub method: MethodInfo,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimultaneousRegion {
    pub z_star: f64,
    pub intervals: Vec<(f64, f64)>,
    pub coverage_target: f64,
    /// Estimated joint coverage at `z_star`.
    pub achieved: f64,
}

/// The `⌈nq⌉`-th smallest value of `v`.
pub fn quantile_estimate(v: &[f64], q: f64) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::InvalidSample("empty sequence".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!("quantile level {q} must lie in (0, 1)")));
    }
    let n = v.len();
    let k = ((n as f64 * q).ceil() as usize).clamp(1, n);
    let mut buf = v.to_vec();
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// Linear-interpolation sample quantile on sorted data.
fn interpolated_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule-of-thumb bandwidth `0.9·min(sd, IQR/1.34)·n^{-1/5}`.
/// Falls back to whichever spread measure is positive.
pub fn silverman_bandwidth(v: &[f64]) -> Result<f64> {
    let n = v.len();
    if n < 2 {
        return Err(Error::InvalidSample("density estimation needs at least 2 values".into()));
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = interpolated_quantile(&sorted, 0.75) - interpolated_quantile(&sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        _ => return Err(Error::Density("sample has zero spread".into())),
    };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// Gaussian kernel density estimate of `v` at `x`.
pub fn kde_density_at(v: &[f64], x: f64) -> Result<f64> {
    let h = silverman_bandwidth(v)?;
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * h * v.len() as f64);
    Ok(norm * v.iter().map(|vi| (-0.5 * ((x - vi) / h).powi(2)).exp()).sum::<f64>())
}

fn check_targets(s: &SampleMatrix, targets: &[TargetSpec]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::InvalidParameter("no targets given".into()));
    }
    for t in targets {
        if t.component >= s.p() {
            return Err(Error::InvalidParameter(format!(
                "target {t} refers to column {} but the chain has {} columns",
                t.component,
                s.p()
            )));
        }
        if let TargetKind::Quantile { q } = t.kind {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::InvalidParameter(format!("quantile level {q} must lie in (0, 1)")));
            }
        }
    }
    Ok(())
}

/// Point estimate for each target.
pub fn point_estimates(s: &SampleMatrix, targets: &[TargetSpec]) -> Result<DVector<f64>> {
    check_targets(s, targets)?;
    let mut out = DVector::zeros(targets.len());
    for (i, t) in targets.iter().enumerate() {
        let col = s.column(t.component);
        out[i] = match t.kind {
            TargetKind::Mean => col.iter().sum::<f64>() / col.len() as f64,
            TargetKind::Quantile { q } => quantile_estimate(col, q)?,
        };
    }
    Ok(out)
}

/// Chain whose long-run covariance estimates `Ω`: mean targets keep their
/// column, quantile targets become `(q − 1{V_i ≤ ξ̂_q}) / f̂(ξ̂_q)`.
pub fn joint_transformed_chain(s: &SampleMatrix, targets: &[TargetSpec]) -> Result<SampleMatrix> {
    check_targets(s, targets)?;
    let columns = targets
        .iter()
        .map(|t| {
            let col = s.column(t.component);
            match t.kind {
                TargetKind::Mean => Ok(col.to_vec()),
                TargetKind::Quantile { q } => {
                    let xi = quantile_estimate(col, q)?;
                    let f = kde_density_at(col, xi)?;
                    if !(f > 0.0) || !f.is_finite() {
                        return Err(Error::Density(format!(
                            "density estimate {f} at the {q}-quantile is not positive"
                        )));
                    }
                    Ok(col.iter().map(|&v| (q - if v <= xi { 1.0 } else { 0.0 }) / f).collect())
                }
            }
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    SampleMatrix::from_columns(&columns)
}

/// Zero-lugsail batch means, the default estimator for `Ω`.
pub fn default_omega_estimator() -> EstimatorSpec {
    EstimatorSpec::batch_means().with_lugsail(LugsailConfig::zero())
}

/// `ν̂` and `Ω` for the given targets, with `Ω` from `estimator` applied to
/// the transformed chain.
pub fn estimate_omega(
    s: &SampleMatrix,
    targets: &[TargetSpec],
    estimator: &EstimatorSpec,
) -> Result<JointEstimate> {
    let nu_hat = point_estimates(s, targets)?;
    let transformed = joint_transformed_chain(s, targets)?;
    let est = estimator.estimate(&transformed)?;
    Ok(JointEstimate {
        targets: targets.to_vec(),
        nu_hat,
        omega: est.sigma,
        method: est.method,
        n: s.n(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZStarOptions {
    /// Allowed error in the achieved joint coverage.
    pub tol: f64,
    /// Seed shared by every probability evaluation of the search, so the
    /// coverage curve being bisected is a fixed monotone function of `z`.
    pub seed: u64,
}

impl Default for ZStarOptions {
    fn default() -> Self {
        Self { tol: 1e-3, seed: MvnOptions::default().seed }
    }
}

/// Smallest common multiplier `z*` such that the rectangle
/// `ν̂_i ± z·sqrt(Ω_ii/n)` has joint normal coverage `1 − α`.
pub fn solve_z_star(joint: &JointEstimate, alpha: f64, opts: &ZStarOptions) -> Result<SimultaneousRegion> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let p = joint.omega.nrows();
    let target = 1.0 - alpha;
    let sd: Vec<f64> = (0..p).map(|i| joint.omega[(i, i)]).collect();
    if let Some(i) = sd.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!("omega has non-positive diagonal entry {i}")));
    }
    let sd: Vec<f64> = sd.into_iter().map(f64::sqrt).collect();
    // Coverage only depends on the correlation matrix.
    let corr = DMatrix::from_fn(p, p, |i, j| joint.omega[(i, j)] / (sd[i] * sd[j]));
    let mvn = MvnOptions::default().with_tol(opts.tol / 4.0).with_seed(opts.seed);
    let zero = DVector::zeros(p);
    let coverage = |z: f64| -> Result<f64> {
        let rect = vec![(-z, z); p];
        Ok(mvn_rect_prob(&zero, &corr, &rect, &mvn)?.prob)
    };

    let mut lo = 0.0;
    let mut hi = 10.0;
    let mut hi_cov = coverage(hi)?;
    while hi_cov < target {
        if hi > 1e3 {
            return Err(Error::Bracket(format!("coverage {hi_cov} < {target} at z = {hi}")));
        }
        lo = hi;
        hi *= 2.0;
        hi_cov = coverage(hi)?;
    }
    // The shared seed makes coverage(z) a fixed non-decreasing function,
    // so plain bisection converges to its crossing point.
    let mut achieved = hi_cov;
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        let c = coverage(mid)?;
        if c < target {
            lo = mid;
        } else {
            hi = mid;
            achieved = c;
        }
    }
    let z = hi;
    let scale = (joint.n as f64).sqrt();
    let intervals = (0..p)
        .map(|i| {
            let half = z * sd[i] / scale;
            (joint.nu_hat[i] - half, joint.nu_hat[i] + half)
        })
        .collect();
    Ok(SimultaneousRegion { z_star: z, intervals, coverage_target: target, achieved })
}
