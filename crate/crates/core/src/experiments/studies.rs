//! Replication studies: coverage of confidence regions, effective sample
//! size ratios, and estimator timings.

use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batch::{BatchRule, LugsailConfig};
use crate::chain::{sample_covariance, mean_vector, SampleMatrix};
use crate::diagnostics::{ess_from_matrices, region_contains};
use crate::error::{Error, Result};
use crate::estimate::{EstimatorSpec, Method};
use crate::spectral::LagWindow;

use super::generators::{ar1_series, stream_rng, Ar1Start};

/// A chain family with known mean and (optionally) known Σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainGenerator {
    /// iid `N(0, 1)` draws.
    IidNormal,
    Ar1 { phi: f64, start: Ar1Start },
}

impl ChainGenerator {
    pub fn ar1(phi: f64) -> Self {
        ChainGenerator::Ar1 { phi, start: Ar1Start::default() }
    }

    pub fn true_mean(&self) -> f64 {
        0.0
    }

    /// Replicate `rep` of a study with master seed `seed`.
    pub fn generate(&self, n: usize, seed: u64, rep: u64) -> Result<SampleMatrix> {
        let mut rng = stream_rng(seed, rep);
        let series = match *self {
            ChainGenerator::IidNormal => ar1_series(&mut rng, 0.0, n, Ar1Start::Fixed(0.0)),
            ChainGenerator::Ar1 { phi, start } => {
                if !(phi.abs() < 1.0) {
                    return Err(Error::InvalidParameter(format!("AR coefficient {phi} must satisfy |phi| < 1")));
                }
                ar1_series(&mut rng, phi, n, start)
            }
        };
        SampleMatrix::from_series(&series)
    }
}

/// An estimator with a display name used in result tables.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedEstimator {
    pub name: String,
    pub spec: EstimatorSpec,
}

impl NamedEstimator {
    pub fn new(name: impl Into<String>, spec: EstimatorSpec) -> Self {
        Self { name: name.into(), spec }
    }
}

/// Original, zero-lugsail and over-lugsail batch means with `b = ⌊√n⌋`,
/// the grid used for the AR(1) studies.
pub fn ar1_estimator_grid() -> Vec<NamedEstimator> {
    let bm = EstimatorSpec::batch_means().with_rule(BatchRule::SquareRoot);
    vec![
        NamedEstimator::new("bm", bm.clone()),
        NamedEstimator::new("bm_zero", bm.clone().with_lugsail(LugsailConfig::zero())),
        NamedEstimator::new("bm_over", bm.with_lugsail(LugsailConfig::over())),
    ]
}

/// Batch means, overlapping batch means, Bartlett spectral variance and
/// initial sequence estimators, each with its over-lugsail variant where
/// one exists. Batch sizes follow the cube-root default.
pub fn timing_estimator_grid() -> Vec<NamedEstimator> {
    let over = LugsailConfig::over();
    let bm = EstimatorSpec::batch_means();
    let obm = EstimatorSpec::new(Method::OverlappingBatchMeans);
    let sv = EstimatorSpec::new(Method::Spectral(LagWindow::Bartlett));
    vec![
        NamedEstimator::new("bm", bm.clone()),
        NamedEstimator::new("bm_over", bm.with_lugsail(over)),
        NamedEstimator::new("obm", obm.clone()),
        NamedEstimator::new("obm_over", obm.with_lugsail(over)),
        NamedEstimator::new("sv", sv.clone()),
        NamedEstimator::new("sv_over", sv.with_lugsail(over)),
        NamedEstimator::new("initseq", EstimatorSpec::new(Method::InitialSequence { adjusted: false })),
        NamedEstimator::new("initseq_adj", EstimatorSpec::new(Method::InitialSequence { adjusted: true })),
    ]
}

/// Study settings shared by the replication studies.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub generator: ChainGenerator,
    pub estimators: Vec<NamedEstimator>,
    /// Chain lengths; each replicate evaluates prefixes of one chain of the
    /// largest length.
    pub ns: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    /// Nominal coverage level of the confidence regions.
    pub alpha: f64,
}

impl StudyConfig {
    pub fn new(generator: ChainGenerator, estimators: Vec<NamedEstimator>, ns: Vec<usize>, replications: usize, seed: u64) -> Self {
        Self { generator, estimators, ns, replications, seed, alpha: 0.05 }
    }

    fn validate(&self) -> Result<()> {
        if self.estimators.is_empty() || self.ns.is_empty() || self.replications == 0 {
            return Err(Error::InvalidParameter("study needs estimators, lengths and replications".into()));
        }
        if self.ns.iter().any(|&n| n < 2) {
            return Err(Error::InvalidParameter("chain lengths must be at least 2".into()));
        }
        Ok(())
    }
}

/// Summary of one (estimator, n) cell over all replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub estimator: String,
    pub n: usize,
    pub replications: usize,
    /// Replicates where the estimator failed (e.g. a non-PD lugsail Σ);
    /// they count as non-covering and are excluded from the other means.
    pub failures: usize,
    pub coverage: f64,
    /// Mean of `|Σ̂|^{1/p}` (the estimate itself when `p = 1`).
    pub mean_sigma: f64,
    pub sd_sigma: f64,
    pub mean_ess_ratio: f64,
    pub sd_ess_ratio: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Cell {
    covered: bool,
    failed: bool,
    sigma: f64,
    ess_ratio: f64,
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = std::env::var("MCSE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        builder = builder.num_threads(k.max(1));
    }
    builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))
}

fn replicate(cfg: &StudyConfig, rep: u64) -> Result<Vec<Cell>> {
    let n_max = *cfg.ns.iter().max().expect("validated");
    let chain = cfg.generator.generate(n_max, cfg.seed, rep)?;
    let truth = DVector::from_element(chain.p(), cfg.generator.true_mean());
    let mut cells = Vec::with_capacity(cfg.ns.len() * cfg.estimators.len());
    for &n in &cfg.ns {
        let prefix = chain.head(n)?;
        let lambda = sample_covariance(&prefix);
        let theta = mean_vector(&prefix);
        for est in &cfg.estimators {
            let cell = est.spec.estimate(&prefix).and_then(|sigma| {
                let covered = region_contains(&truth, &theta, &sigma, n, cfg.alpha)?;
                let det = sigma.sigma.determinant().max(0.0).powf(1.0 / sigma.dim() as f64);
                let ess = ess_from_matrices(&lambda, &sigma.sigma, n)?;
                Ok(Cell { covered, failed: false, sigma: det, ess_ratio: ess / n as f64 })
            });
            cells.push(match cell {
                Ok(c) => c,
                Err(e) if e.is_numerical() => Cell { failed: true, ..Cell::default() },
                Err(e) => return Err(e),
            });
        }
    }
    Ok(cells)
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    (m, sd)
}

/// Runs every replicate (in parallel, capped by `MCSE_THREADS`) and
/// summarises each (estimator, n) cell. Results depend only on the seed.
pub fn replication_study(cfg: &StudyConfig) -> Result<Vec<StudyRow>> {
    cfg.validate()?;
    let pool = thread_pool()?;
    let reps: Vec<Vec<Cell>> = pool.install(|| {
        (0..cfg.replications as u64)
            .into_par_iter()
            .map(|r| replicate(cfg, r))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::new();
    let k = cfg.estimators.len();
    for (ni, &n) in cfg.ns.iter().enumerate() {
        for (ei, est) in cfg.estimators.iter().enumerate() {
            let cells: Vec<Cell> = reps.iter().map(|r| r[ni * k + ei]).collect();
            let ok: Vec<&Cell> = cells.iter().filter(|c| !c.failed).collect();
            let covered = cells.iter().filter(|c| c.covered).count();
            let (mean_sigma, sd_sigma) = mean_sd(&ok.iter().map(|c| c.sigma).collect::<Vec<_>>());
            let (mean_ess_ratio, sd_ess_ratio) = mean_sd(&ok.iter().map(|c| c.ess_ratio).collect::<Vec<_>>());
            rows.push(StudyRow {
                estimator: est.name.clone(),
                n,
                replications: cells.len(),
                failures: cells.len() - ok.len(),
                coverage: covered as f64 / cells.len() as f64,
                mean_sigma,
                sd_sigma,
                mean_ess_ratio,
                sd_ess_ratio,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub estimator: String,
    pub n: usize,
    pub replications: usize,
    pub coverage: f64,
    /// Binomial standard error of `coverage`.
    pub std_error: f64,
    pub mean_sigma: f64,
    pub failures: usize,
}

/// Fraction of replications whose `1 − α` region covers the true mean.
pub fn coverage_study(cfg: &StudyConfig) -> Result<Vec<CoverageRow>> {
    Ok(replication_study(cfg)?
        .into_iter()
        .map(|r| CoverageRow {
            std_error: (r.coverage * (1.0 - r.coverage) / r.replications as f64).sqrt(),
            estimator: r.estimator,
            n: r.n,
            replications: r.replications,
            coverage: r.coverage,
            mean_sigma: r.mean_sigma,
            failures: r.failures,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssRow {
    pub estimator: String,
    pub n: usize,
    pub replications: usize,
    pub mean_ess_ratio: f64,
    pub sd_ess_ratio: f64,
    /// Standard error of `mean_ess_ratio`.
    pub std_error: f64,
    pub failures: usize,
}

/// Replication mean and spread of the estimated `ESS/n`.
pub fn ess_study(cfg: &StudyConfig) -> Result<Vec<EssRow>> {
    Ok(replication_study(cfg)?
        .into_iter()
        .map(|r| {
            let ok = (r.replications - r.failures).max(1) as f64;
            EssRow {
                std_error: r.sd_ess_ratio / ok.sqrt(),
                estimator: r.estimator,
                n: r.n,
                replications: r.replications,
                mean_ess_ratio: r.mean_ess_ratio,
                sd_ess_ratio: r.sd_ess_ratio,
                failures: r.failures,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub estimator: String,
    pub median_secs: f64,
    pub min_secs: f64,
    pub max_secs: f64,
    pub repetitions: usize,
}

/// Median wall time per call of each estimator on `s` over `repetitions`
/// timed samples, after one untimed warm-up call. Fast estimators are
/// called several times per sample (enough for roughly 20 ms) so that
/// timer resolution and scheduling jitter do not dominate. Runs
/// sequentially so timings do not compete for cores.
pub fn timing_bench(s: &SampleMatrix, estimators: &[NamedEstimator], repetitions: usize) -> Result<Vec<TimingRow>> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter("need at least one repetition".into()));
    }
    let call = |est: &NamedEstimator| -> Result<()> {
        match est.spec.estimate(s) {
            Ok(e) => {
                std::hint::black_box(e);
                Ok(())
            }
            Err(e) if e.is_numerical() => Ok(()),
            Err(e) => Err(e),
        }
    };
    estimators
        .iter()
        .map(|est| {
            let t0 = Instant::now();
            call(est)?;
            let warm = t0.elapsed().as_secs_f64();
            let inner = ((0.02 / warm.max(1e-9)).ceil() as usize).clamp(1, 1000);
            let mut times = Vec::with_capacity(repetitions);
            for _ in 0..repetitions {
                let t0 = Instant::now();
                for _ in 0..inner {
                    call(est)?;
                }
                times.push(t0.elapsed().as_secs_f64() / inner as f64);
            }
            times.sort_by(f64::total_cmp);
            let mid = times.len() / 2;
            let median = if times.len() % 2 == 1 { times[mid] } else { 0.5 * (times[mid - 1] + times[mid]) };
            Ok(TimingRow {
                estimator: est.name.clone(),
                median_secs: median,
                min_secs: times[0],
                max_secs: times[times.len() - 1],
                repetitions,
            })
        })
        .collect()
}

/// Whether the median times of the named estimators are non-decreasing in
/// the given order (`None` if a name is missing).
pub fn timing_ordered(rows: &[TimingRow], names: &[&str]) -> Option<bool> {
    let times: Option<Vec<f64>> = names
        .iter()
        .map(|n| rows.iter().find(|r| r.estimator == *n).map(|r| r.median_secs))
        .collect();
    Some(times?.windows(2).all(|w| w[0] <= w[1]))
}
