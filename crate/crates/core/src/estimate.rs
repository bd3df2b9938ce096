//! The common result type for every long-run covariance estimator, and a
//! selector that dispatches to the concrete estimators.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::batch::{self, BatchRule, LugsailConfig, LugsailRegime};
use crate::chain::SampleMatrix;
use crate::error::{Error, Result};
use crate::initseq;
use crate::linalg;
use crate::spectral::{self, LagWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    BatchMeans,
    OverlappingBatchMeans,
    SpectralVariance,
    InitialSequence,
    AdjustedInitialSequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LugsailParams {
    pub r: f64,
    pub c: f64,
}

/// How an estimate was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodInfo {
    pub family: Family,
    /// Chain length the estimate was computed from.
    pub n: usize,
    /// Batch size (BM, OBM) or truncation point (SV).
    pub batch_size: Option<usize>,
    pub window: Option<LagWindow>,
    pub lugsail: Option<LugsailParams>,
    /// Chosen truncation index `t_n` for initial-sequence estimators.
    pub truncation: Option<usize>,
}

impl MethodInfo {
    pub(crate) fn new(family: Family, n: usize) -> Self {
        Self {
            family,
            n,
            batch_size: None,
            window: None,
            lugsail: None,
            truncation: None,
        }
    }
}

/// A `p × p` estimate of the asymptotic covariance Σ.
///
/// Lugsail combinations are symmetric but need not be positive
/// semidefinite; `psd` records whether this one is. They are never projected.
#[derive(Debug, Clone, PartialEq)]
pub struct LrvEstimate {
    pub sigma: DMatrix<f64>,
    pub method: MethodInfo,
    pub psd: bool,
}

impl LrvEstimate {
    pub(crate) fn new(sigma: DMatrix<f64>, method: MethodInfo) -> Self {
        let psd = linalg::is_positive_semidefinite(&sigma);
        Self { sigma, method, psd }
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// Univariate value; panics if `p != 1`.
    pub fn scalar(&self) -> f64 {
        assert_eq!(self.dim(), 1, "scalar() on a {}x{} estimate", self.dim(), self.dim());
        self.sigma[(0, 0)]
    }
}

/// Estimator family choice.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    BatchMeans,
    OverlappingBatchMeans,
    Spectral(LagWindow),
    InitialSequence { adjusted: bool },
}

/// Lugsail selection for an estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LugsailChoice {
    Fixed(LugsailConfig),
    /// Pick the regime from the chain's lag-1 autocorrelation.
    Auto,
}

impl LugsailChoice {
    pub fn none() -> Self {
        Self::Fixed(LugsailConfig::none())
    }
}

/// Full description of how to estimate Σ from a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    pub method: Method,
    /// Explicit batch size / truncation point; `None` applies `rule`.
    pub batch_size: Option<usize>,
    pub rule: BatchRule,
    pub lugsail: LugsailChoice,
}

impl EstimatorSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            batch_size: None,
            rule: BatchRule::CubeRoot,
            lugsail: LugsailChoice::none(),
        }
    }

    pub fn batch_means() -> Self {
        Self::new(Method::BatchMeans)
    }

    pub fn with_batch_size(mut self, b: usize) -> Self {
        self.batch_size = Some(b);
        self
    }

    pub fn with_rule(mut self, rule: BatchRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_lugsail(mut self, cfg: LugsailConfig) -> Self {
        self.lugsail = LugsailChoice::Fixed(cfg);
        self
    }

    pub fn with_auto_lugsail(mut self) -> Self {
        self.lugsail = LugsailChoice::Auto;
        self
    }

    fn lugsail_for(&self, s: &SampleMatrix) -> Result<LugsailConfig> {
        match self.lugsail {
            LugsailChoice::Fixed(cfg) => Ok(cfg),
            LugsailChoice::Auto => Ok(batch::lugsail_policy(batch::lag1_autocorrelation(s)?)),
        }
    }

    /// Runs the configured estimator on `s`.
    pub fn estimate(&self, s: &SampleMatrix) -> Result<LrvEstimate> {
        if let Method::InitialSequence { adjusted } = self.method {
            if self.lugsail != LugsailChoice::none() {
                return Err(Error::InvalidParameter(
                    "lugsail adjustments do not apply to initial-sequence estimators".into(),
                ));
            }
            let res = if adjusted {
                initseq::adjusted_initial_sequence(s)?
            } else {
                initseq::initial_sequence(s)?
            };
            return Ok(res.into_estimate(s.n()));
        }

        let cfg = self.lugsail_for(s)?;
        let r = if cfg.regime == LugsailRegime::None { 1.0 } else { cfg.r };
        let b = match self.batch_size {
            Some(b) => b,
            None => batch::default_batch_size(s.n(), self.rule, r),
        };
        match &self.method {
            Method::BatchMeans => batch::lugsail_batch_means(s, b, &cfg),
            Method::OverlappingBatchMeans => batch::lugsail_overlapping_batch_means(s, b, &cfg),
            Method::Spectral(window) => {
                if cfg.regime == LugsailRegime::None {
                    spectral::spectral_variance(s, window, b)
                } else {
                    let c = cfg.weight(s.n(), b)?;
                    spectral::lugsail_spectral_variance(s, window, b, cfg.r, c)
                }
            }
            Method::InitialSequence { .. } => unreachable!(),
        }
    }
}
