//! Batch-means estimators of Σ: non-overlapping and overlapping batch
//! means, lugsail combinations of two batch sizes, and the regime policy
//! that picks lugsail parameters from the chain's lag-1 autocorrelation.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::chain::{lag_matrix, SampleMatrix};
use crate::error::{Error, Result};
use crate::estimate::{Family, LrvEstimate, LugsailParams, MethodInfo};

/// Batch layout for a chain of length `n`: `a = ⌊n/b⌋` batches of size `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchConfig {
    pub b: usize,
    pub a: usize,
}

impl BatchConfig {
    pub fn new(n: usize, b: usize) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidParameter("batch size must be at least 1".into()));
        }
        let a = n / b;
        if a < 2 {
            return Err(Error::InsufficientBatches { n, b });
        }
        Ok(Self { b, a })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LugsailRegime {
    None,
    Zero,
    Adaptive,
    Over,
    Custom,
}

/// Lugsail parameters: ratio `r` and weight `c`, where `c = None` means the
/// adaptive weight `c_n` evaluated at the current chain length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LugsailConfig {
    pub r: f64,
    pub c: Option<f64>,
    pub regime: LugsailRegime,
}

impl LugsailConfig {
    pub fn none() -> Self {
        Self { r: 1.0, c: Some(0.0), regime: LugsailRegime::None }
    }

    /// `r = 2, c = 1/2`: first-order bias cancels.
    pub fn zero() -> Self {
        Self { r: 2.0, c: Some(0.5), regime: LugsailRegime::Zero }
    }

    pub fn adaptive() -> Self {
        Self { r: 2.0, c: None, regime: LugsailRegime::Adaptive }
    }

    /// `r = 3, c = 1/2`: deliberately positive first-order bias.
    pub fn over() -> Self {
        Self { r: 3.0, c: Some(0.5), regime: LugsailRegime::Over }
    }

    pub fn custom(r: f64, c: f64) -> Result<Self> {
        check_lugsail(r, c)?;
        Ok(Self { r, c: Some(c), regime: LugsailRegime::Custom })
    }

    /// The weight `c` to use for a chain of length `n` at batch size `b`.
    pub fn weight(&self, n: usize, b: usize) -> Result<f64> {
        match self.c {
            Some(c) => Ok(c),
            None => adaptive_c(n, b),
        }
    }
}

pub(crate) fn check_lugsail(r: f64, c: f64) -> Result<()> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("lugsail ratio r = {r} must be >= 1")));
    }
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("lugsail weight c = {c} must lie in [0, 1)")));
    }
    Ok(())
}

/// Non-overlapping batch means with batch size `b`.
///
/// When `b` does not divide `n` only the first `a·b` rows are used, and the
/// centring mean is taken over those rows.
pub fn batch_means(s: &SampleMatrix, b: usize) -> Result<LrvEstimate> {
    let cfg = BatchConfig::new(s.n(), b)?;
    let p = s.p();
    let used = cfg.a * cfg.b;

    // means[j][k]: mean of batch k in component j
    let means: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            s.column(j)[..used]
                .chunks_exact(b)
                .map(|chunk| chunk.iter().sum::<f64>() / b as f64)
                .collect()
        })
        .collect();
    let dev: Vec<Vec<f64>> = means
        .into_iter()
        .map(|m| {
            let grand = m.iter().sum::<f64>() / m.len() as f64;
            m.into_iter().map(|v| v - grand).collect()
        })
        .collect();

    let scale = b as f64 / (cfg.a as f64 - 1.0);
    let sigma = crate::chain::symmetric_from_fn(p, |i, j| crate::chain::dot(&dev[i], &dev[j]) * scale);
    let mut method = MethodInfo::new(Family::BatchMeans, s.n());
    method.batch_size = Some(b);
    Ok(LrvEstimate::new(sigma, method))
}

/// Overlapping batch means over all `n − b + 1` windows of length `b`.
pub fn overlapping_batch_means(s: &SampleMatrix, b: usize) -> Result<LrvEstimate> {
    let n = s.n();
    if b == 0 || b >= n {
        return Err(Error::InvalidParameter(format!(
            "overlapping batch size {b} must lie in [1, {}]",
            n - 1
        )));
    }
    let p = s.p();
    let count = n - b + 1;
    let dev: Vec<Vec<f64>> = s
        .centered_columns()
        .iter()
        .map(|z| {
            let mut window: f64 = z[..b].iter().sum();
            let mut out = Vec::with_capacity(count);
            out.push(window / b as f64);
            for l in 1..count {
                window += z[l + b - 1] - z[l - 1];
                out.push(window / b as f64);
            }
            out
        })
        .collect();

    let nf = n as f64;
    let bf = b as f64;
    let scale = nf * bf / ((nf - bf) * (nf - bf + 1.0));
    let sigma = crate::chain::symmetric_from_fn(p, |i, j| crate::chain::dot(&dev[i], &dev[j]) * scale);
    let mut method = MethodInfo::new(Family::OverlappingBatchMeans, n);
    method.batch_size = Some(b);
    Ok(LrvEstimate::new(sigma, method))
}

/// `(1/(1−c))·big − (c/(1−c))·small`.
///
/// Returns `big` untouched when `c = 0` or when both inputs coincide (the
/// `r = 1` case), so those reduce to the base estimator exactly.
pub fn lugsail_combine(big: &LrvEstimate, small: &LrvEstimate, c: f64) -> Result<LrvEstimate> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("lugsail weight c = {c} must lie in [0, 1)")));
    }
    if big.dim() != small.dim() || big.method.family != small.method.family {
        return Err(Error::InvalidParameter(
            "lugsail components must share dimension and estimator family".into(),
        ));
    }
    let ratio = match (big.method.batch_size, small.method.batch_size) {
        (Some(bb), Some(bs)) if bs > 0 => bb as f64 / bs as f64,
        _ => 1.0,
    };
    if c == 0.0 || big.sigma == small.sigma {
        let mut out = big.clone();
        out.method.lugsail = Some(LugsailParams { r: ratio, c });
        return Ok(out);
    }
    let w_big = 1.0 / (1.0 - c);
    let w_small = c / (1.0 - c);
    let sigma = &big.sigma * w_big - &small.sigma * w_small;
    let mut method = big.method.clone();
    method.lugsail = Some(LugsailParams { r: ratio, c });
    Ok(LrvEstimate::new(sigma, method))
}

fn small_batch(b: usize, r: f64) -> usize {
    let small = (b as f64 / r).floor() as usize;
    if small == 0 {
        warn!("lugsail small batch size floor({b}/{r}) is 0; using 1");
        1
    } else {
        small
    }
}

fn lugsail_with(
    s: &SampleMatrix,
    b: usize,
    cfg: &LugsailConfig,
    base: fn(&SampleMatrix, usize) -> Result<LrvEstimate>,
) -> Result<LrvEstimate> {
    let big = base(s, b)?;
    if cfg.regime == LugsailRegime::None {
        return Ok(big);
    }
    let c = cfg.weight(s.n(), b)?;
    check_lugsail(cfg.r, c)?;
    let small = base(s, small_batch(b, cfg.r))?;
    let mut out = lugsail_combine(&big, &small, c)?;
    out.method.lugsail = Some(LugsailParams { r: cfg.r, c });
    Ok(out)
}

/// Batch means at `b`, lugsail-combined with batch size `⌊b/r⌋` unless the
/// regime is `None`.
pub fn lugsail_batch_means(s: &SampleMatrix, b: usize, cfg: &LugsailConfig) -> Result<LrvEstimate> {
    lugsail_with(s, b, cfg, batch_means)
}

pub fn lugsail_overlapping_batch_means(
    s: &SampleMatrix,
    b: usize,
    cfg: &LugsailConfig,
) -> Result<LrvEstimate> {
    lugsail_with(s, b, cfg, overlapping_batch_means)
}

/// Adaptive lugsail weight `c_n = (log n − log b + 1) / (2(log n − log b) + 1)`.
pub fn adaptive_c(n: usize, b: usize) -> Result<f64> {
    if b == 0 || b >= n {
        return Err(Error::InvalidParameter(format!(
            "adaptive weight needs 1 <= b < n (b = {b}, n = {n})"
        )));
    }
    let d = (n as f64).ln() - (b as f64).ln();
    Ok((d + 1.0) / (2.0 * d + 1.0))
}

/// Lugsail regime for a lag-1 autocorrelation estimate: zero below 0.7
/// (including negative correlation), adaptive on [0.7, 0.95), over above.
pub fn lugsail_policy(rho: f64) -> LugsailConfig {
    if rho >= 0.95 {
        LugsailConfig::over()
    } else if rho >= 0.7 {
        LugsailConfig::adaptive()
    } else {
        LugsailConfig::zero()
    }
}

/// Largest per-component lag-1 autocorrelation; constant components are
/// skipped and an all-constant chain gives 0.
pub fn lag1_autocorrelation(s: &SampleMatrix) -> Result<f64> {
    if s.n() < 3 {
        return Err(Error::InvalidSample(format!(
            "lag-1 autocorrelation needs at least 3 iterations, got {}",
            s.n()
        )));
    }
    let z = s.centered_columns();
    let mut best: Option<f64> = None;
    for col in &z {
        let r0 = crate::chain::dot(col, col);
        if r0 <= 0.0 {
            continue;
        }
        let r1 = lag_matrix(std::slice::from_ref(col), 1)[(0, 0)] * col.len() as f64;
        let rho = r1 / r0;
        best = Some(best.map_or(rho, |b: f64| b.max(rho)));
    }
    Ok(best.unwrap_or(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchRule {
    /// `⌊n^{1/3}⌋`, the mean-squared-error rate for batch means.
    CubeRoot,
    /// `⌊√n⌋`.
    SquareRoot,
}

fn integer_root(n: usize, k: u32) -> usize {
    let mut b = (n as f64).powf(1.0 / k as f64).round() as usize;
    while b > 0 && b.checked_pow(k).is_none_or(|v| v > n) {
        b -= 1;
    }
    while (b + 1).checked_pow(k).is_some_and(|v| v <= n) {
        b += 1;
    }
    b
}

/// Default batch size (or truncation point) for a chain of length `n`,
/// clamped so that at least two batches remain and `⌊b/r⌋ ≥ 1`.
pub fn default_batch_size(n: usize, rule: BatchRule, r: f64) -> usize {
    let raw = match rule {
        BatchRule::CubeRoot => integer_root(n, 3),
        BatchRule::SquareRoot => integer_root(n, 2),
    };
    let min_b = r.max(1.0).ceil() as usize;
    let max_b = (n / 2).max(1);
    raw.max(min_b).min(max_b).max(1)
}

/// Exact bias of univariate batch means for a stationary Gaussian AR(1)
/// chain with unit innovations, when `n = a·b`:
///
/// ```text
/// −2(a+1)/(ab) Σ_{s=1}^{b−1} s R(s) − 2 Σ_{s≥b} R(s) − 2/(a−1) Σ_{s=b}^{n−1} (1 − s/n) R(s)
/// ```
///
/// with `R(s) = φ^s / (1 − φ²)`.
pub fn bm_exact_bias_ar1(phi: f64, n: usize, b: usize) -> Result<f64> {
    if !(phi.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("AR coefficient {phi} must satisfy |phi| < 1")));
    }
    let cfg = BatchConfig::new(n, b)?;
    if cfg.a * cfg.b != n {
        return Err(Error::InvalidParameter(format!("exact bias needs b | n (n = {n}, b = {b})")));
    }
    let a = cfg.a as f64;
    let bf = b as f64;
    let nf = n as f64;
    let var = 1.0 / (1.0 - phi * phi);
    let r = |s: usize| phi.powi(s as i32) * var;

    let head: f64 = (1..b).map(|s| s as f64 * r(s)).sum();
    let tail_all = r(b) / (1.0 - phi);
    let tail_finite: f64 = (b..n).map(|s| (1.0 - s as f64 / nf) * r(s)).sum();
    Ok(-2.0 * (a + 1.0) / (a * bf) * head - 2.0 * tail_all - 2.0 / (a - 1.0) * tail_finite)
}

/// Exact bias of the lugsail batch-means combination, by linearity.
pub fn lugsail_bm_exact_bias_ar1(phi: f64, n: usize, b: usize, r: f64, c: f64) -> Result<f64> {
    check_lugsail(r, c)?;
    let big = bm_exact_bias_ar1(phi, n, b)?;
    if c == 0.0 {
        return Ok(big);
    }
    let small = bm_exact_bias_ar1(phi, n, small_batch(b, r))?;
    Ok(big / (1.0 - c) - small * c / (1.0 - c))
}

/// Sum of lag covariances weighted `−|k|`, i.e. the first-order bias
/// constant Γ, for an AR(1) chain.
pub fn ar1_gamma(phi: f64) -> f64 {
    -2.0 * phi / ((1.0 - phi).powi(2) * (1.0 - phi * phi))
}
