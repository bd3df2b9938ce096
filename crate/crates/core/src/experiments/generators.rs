//! Seeded synthetic chains: Gaussian AR(1), random-walk Metropolis on a
//! normal mixture, and random-walk Metropolis on a Bayesian logistic
//! regression posterior.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::batch::ar1_gamma;
use crate::chain::SampleMatrix;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;

/// RNG for replicate `stream` of a study seeded with `seed`. Streams are
/// independent of each other and of the order they are consumed in.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ar1Start {
    /// Deterministic `X_0`.
    Fixed(f64),
    /// `X_0` drawn from the stationary distribution `N(0, 1/(1−φ²))`.
    Stationary,
}

impl Default for Ar1Start {
    fn default() -> Self {
        Ar1Start::Fixed(0.0)
    }
}

/// `X_{t+1} = φ X_t + ε_t` with standard normal innovations; the returned
/// chain is `X_1, …, X_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Config {
    pub phi: f64,
    pub n: usize,
    pub seed: u64,
    pub start: Ar1Start,
}

impl Ar1Config {
    pub fn new(phi: f64, n: usize, seed: u64) -> Result<Self> {
        if !(phi.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!("AR coefficient {phi} must satisfy |phi| < 1")));
        }
        if n < 2 {
            return Err(Error::InvalidParameter("chain length must be at least 2".into()));
        }
        Ok(Self { phi, n, seed, start: Ar1Start::default() })
    }

    pub fn with_start(mut self, start: Ar1Start) -> Self {
        self.start = start;
        self
    }
}

/// Draws an AR(1) path from an explicit RNG.
pub fn ar1_series<R: Rng + ?Sized>(rng: &mut R, phi: f64, n: usize, start: Ar1Start) -> Vec<f64> {
    let mut x = match start {
        Ar1Start::Fixed(x0) => x0,
        Ar1Start::Stationary => {
            let z: f64 = rng.sample(StandardNormal);
            z / (1.0 - phi * phi).sqrt()
        }
    };
    (0..n)
        .map(|_| {
            let e: f64 = rng.sample(StandardNormal);
            x = phi * x + e;
            x
        })
        .collect()
}

pub fn ar1_generate(cfg: &Ar1Config) -> Result<SampleMatrix> {
    let cfg = Ar1Config::new(cfg.phi, cfg.n, cfg.seed)?.with_start(cfg.start);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    SampleMatrix::from_series(&ar1_series(&mut rng, cfg.phi, cfg.n, cfg.start))
}

/// Analytic quantities of the stationary AR(1) chain with unit innovations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasTruth {
    /// Asymptotic variance `1/(1−φ)²`.
    pub sigma_true: f64,
    /// First-order bias constant `Σ_k −|k| R(k)`; batch means have bias `≈ Γ/b`.
    pub gamma: f64,
    /// `ESS/n = (1−φ)²/(1−φ²)`.
    pub ess_ratio: f64,
}

pub fn ar1_truth(phi: f64) -> Result<BiasTruth> {
    if !(phi.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("AR coefficient {phi} must satisfy |phi| < 1")));
    }
    Ok(BiasTruth {
        sigma_true: 1.0 / (1.0 - phi).powi(2),
        gamma: ar1_gamma(phi),
        ess_ratio: (1.0 - phi).powi(2) / (1.0 - phi * phi),
    })
}

/// Chain output plus the sampler's acceptance rate.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcRun {
    pub samples: SampleMatrix,
    pub acceptance_rate: f64,
}

/// Random-walk Metropolis targeting a univariate normal mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureConfig {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub proposal_sd: f64,
    pub n: usize,
    pub seed: u64,
    /// Starting state; `None` draws it from the mixture itself.
    pub start: Option<f64>,
}

impl MixtureConfig {
    /// The three-component mixture `0.2 N(2.5,1) + 0.3 N(4.5,1) + 0.5 N(7.5,1)`
    /// with proposal standard deviation 1/2.
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            weights: vec![0.2, 0.3, 0.5],
            means: vec![2.5, 4.5, 7.5],
            sds: vec![1.0, 1.0, 1.0],
            proposal_sd: 0.5,
            n,
            seed,
            start: None,
        }
    }

    pub fn with_proposal_sd(mut self, sd: f64) -> Self {
        self.proposal_sd = sd;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 || self.means.len() != k || self.sds.len() != k {
            return Err(Error::InvalidParameter("mixture component lists differ in length".into()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("mixture weights must be non-negative and sum to 1".into()));
        }
        if self.sds.iter().any(|s| !(*s > 0.0)) || !(self.proposal_sd > 0.0) {
            return Err(Error::InvalidParameter("standard deviations must be positive".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter("chain length must be at least 2".into()));
        }
        Ok(())
    }

    /// Mean of the mixture, `Σ w_k μ_k`.
    pub fn target_mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    /// Log density up to a constant shared by all states.
    fn log_density(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((w, m), s)| w.ln() - s.ln() - 0.5 * ((x - m) / s).powi(2))
            .collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        self.means[k] + self.sds[k] * z
    }
}

pub fn mixture_mh_run(cfg: &MixtureConfig) -> Result<McmcRun> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = match cfg.start {
        Some(x0) => x0,
        None => cfg.draw(&mut rng),
    };
    let mut lx = cfg.log_density(x);
    let step = Normal::new(0.0, cfg.proposal_sd).expect("validated proposal sd");
    let mut accepted = 0usize;
    let mut out = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let y = x + step.sample(&mut rng);
        let ly = cfg.log_density(y);
        let u: f64 = rng.random();
        if u.ln() < ly - lx {
            x = y;
            lx = ly;
            accepted += 1;
        }
        out.push(x);
    }
    Ok(McmcRun {
        samples: SampleMatrix::from_series(&out)?,
        acceptance_rate: accepted as f64 / cfg.n as f64,
    })
}

pub fn mixture_mh_generate(cfg: &MixtureConfig) -> Result<SampleMatrix> {
    Ok(mixture_mh_run(cfg)?.samples)
}

/// Random-walk Metropolis on the posterior of a logistic regression with
/// synthetic standard-normal covariates and prior `N(0, prior_var·I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub n_obs: usize,
    pub p_coef: usize,
    pub n: usize,
    pub seed: u64,
    pub prior_var: f64,
}

impl LogisticConfig {
    pub fn new(n_obs: usize, p_coef: usize, n: usize, seed: u64) -> Self {
        Self { n_obs, p_coef, n, seed, prior_var: 0.01 }
    }

    /// Coefficients the synthetic responses are drawn from: alternating
    /// signs with magnitudes decreasing from 1 to about 1/2.
    pub fn true_beta(&self) -> DVector<f64> {
        let p = self.p_coef as f64;
        DVector::from_fn(self.p_coef, |j, _| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * (1.0 - 0.5 * j as f64 / p)
        })
    }
}

/// Synthetic design matrix and 0/1 responses.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticData {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

pub fn logistic_data(cfg: &LogisticConfig) -> LogisticData {
    let mut rng = stream_rng(cfg.seed, 0);
    let x = DMatrix::from_fn(cfg.n_obs, cfg.p_coef, |_, _| rng.sample::<f64, _>(StandardNormal));
    let eta = &x * cfg.true_beta();
    let y = eta.map(|e| if rng.random::<f64>() < sigmoid(e) { 1.0 } else { 0.0 });
    LogisticData { x, y }
}

fn sigmoid(e: f64) -> f64 {
    1.0 / (1.0 + (-e).exp())
}

/// `log(1 + e^η)` without overflow.
fn softplus(e: f64) -> f64 {
    if e > 0.0 {
        e + (-e).exp().ln_1p()
    } else {
        e.exp().ln_1p()
    }
}

struct Posterior<'a> {
    data: &'a LogisticData,
    prior_prec: f64,
}

impl Posterior<'_> {
    fn log_density(&self, beta: &DVector<f64>) -> f64 {
        let eta = &self.data.x * beta;
        let lik: f64 = eta.iter().zip(self.data.y.iter()).map(|(e, y)| y * e - softplus(*e)).sum();
        lik - 0.5 * self.prior_prec * beta.norm_squared()
    }

    /// Posterior mode by Newton's method, and the negative Hessian there.
    fn mode(&self, p: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let x = &self.data.x;
        let mut beta = DVector::zeros(p);
        for _ in 0..100 {
            let eta = x * &beta;
            let mu = eta.map(sigmoid);
            let grad = x.transpose() * (&self.data.y - &mu) - &beta * self.prior_prec;
            let w = mu.map(|m| m * (1.0 - m));
            let mut h = DMatrix::identity(p, p) * self.prior_prec;
            for i in 0..x.nrows() {
                let row = x.row(i);
                h += row.transpose() * row * w[i];
            }
            let step = h
                .clone()
                .cholesky()
                .ok_or_else(|| Error::NotPositiveDefinite("logistic posterior Hessian".into()))?
                .solve(&grad);
            beta += &step;
            if step.amax() < 1e-12 {
                let eta = x * &beta;
                let mut h = DMatrix::identity(p, p) * self.prior_prec;
                for i in 0..x.nrows() {
                    let m = sigmoid(eta[i]);
                    let row = x.row(i);
                    h += row.transpose() * row * (m * (1.0 - m));
                }
                return Ok((beta, h));
            }
        }
        Err(Error::Bracket("Newton iteration for the posterior mode did not converge".into()))
    }
}

/// Runs the sampler from the posterior mode with Gaussian proposals of
/// covariance `(2.38²/p) H⁻¹`, `H` the negative log-posterior Hessian at the mode.
pub fn logistic_mh_run(cfg: &LogisticConfig) -> Result<McmcRun> {
    if cfg.p_coef == 0 || cfg.n < 2 || !(cfg.prior_var > 0.0) {
        return Err(Error::InvalidParameter("need p_coef >= 1, n >= 2, prior_var > 0".into()));
    }
    let p = cfg.p_coef;
    let data = logistic_data(cfg);
    let post = Posterior { data: &data, prior_prec: 1.0 / cfg.prior_var };
    let (mode, h) = post.mode(p)?;
    let h_inv = h
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("logistic posterior Hessian".into()))?;
    let scale = 2.38 * 2.38 / p as f64;
    let chol = Cholesky::new(&(h_inv * scale))
        .ok_or_else(|| Error::NotPositiveDefinite("proposal covariance".into()))?;
    let l = chol.lower().clone();

    let mut rng = stream_rng(cfg.seed, 1);
    let mut beta = mode;
    let mut lp = post.log_density(&beta);
    let mut accepted = 0usize;
    let mut out = DMatrix::zeros(cfg.n, p);
    for t in 0..cfg.n {
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let prop = &beta + &l * z;
        let lq = post.log_density(&prop);
        let u: f64 = rng.random();
        if u.ln() < lq - lp {
            beta = prop;
            lp = lq;
            accepted += 1;
        }
        out.set_row(t, &beta.transpose());
    }
    Ok(McmcRun {
        samples: SampleMatrix::new(out)?,
        acceptance_rate: accepted as f64 / cfg.n as f64,
    })
}

pub fn logistic_mh_generate(n_obs: usize, p_coef: usize, n: usize, seed: u64) -> Result<SampleMatrix> {
    Ok(logistic_mh_run(&LogisticConfig::new(n_obs, p_coef, n, seed))?.samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::lag1_autocorrelation;
    use crate::chain::{mean_vector, sample_covariance};
    use approx::assert_abs_diff_eq;

    #[test]
    fn ar1_truth_values() {
        let t = ar1_truth(0.92).unwrap();
        assert_abs_diff_eq!(t.sigma_true, 156.25, epsilon = 1e-9);
        assert_abs_diff_eq!(t.ess_ratio, 0.0416667, epsilon = 1e-7);
        let t = ar1_truth(0.0).unwrap();
        assert_eq!((t.sigma_true, t.ess_ratio, t.gamma), (1.0, 1.0, 0.0));
        let t = ar1_truth(0.98).unwrap();
        assert_abs_diff_eq!(t.sigma_true, 2500.0, epsilon = 1e-8);
        assert_abs_diff_eq!(t.ess_ratio, 0.0101010, epsilon = 1e-7);
        assert!(ar1_truth(1.0).is_err());
    }

    #[test]
    fn ar1_generation() {
        let iid = ar1_generate(&Ar1Config::new(0.0, 100_000, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(sample_covariance(&iid)[(0, 0)], 1.0, epsilon = 0.02);
        let cfg = Ar1Config::new(0.9, 1_000_000, 2).unwrap();
        let ar = ar1_generate(&cfg).unwrap();
        let v = sample_covariance(&ar)[(0, 0)];
        assert!((v / (1.0 / 0.19) - 1.0).abs() < 0.03, "{v}");
        assert_eq!(ar, ar1_generate(&cfg).unwrap());
        assert_ne!(ar.column(0)[..10], ar1_generate(&Ar1Config { seed: 3, ..cfg }).unwrap().column(0)[..10]);
        assert!(Ar1Config::new(-1.0, 10, 0).is_err());
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(7, 0).random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let b: u64 = stream_rng(7, 1).random();
        assert_ne!(a[0], b);
    }

    #[test]
    fn mixture_chain() {
        let cfg = MixtureConfig::new(50_000, 4);
        assert_abs_diff_eq!(cfg.target_mean(), 5.6, epsilon = 1e-12);
        let run = mixture_mh_run(&cfg).unwrap();
        let rho = lag1_autocorrelation(&run.samples).unwrap();
        assert!((rho - 0.98).abs() < 0.01, "{rho}");
        assert_eq!(run.samples, mixture_mh_generate(&cfg).unwrap());
        let wide = mixture_mh_run(&cfg.clone().with_proposal_sd(50.0)).unwrap();
        assert!(wide.acceptance_rate < run.acceptance_rate);

        let mut bad = MixtureConfig::new(10, 0);
        bad.weights = vec![0.5, 0.3, 0.3];
        assert!(mixture_mh_run(&bad).is_err());
    }

    #[test]
    fn logistic_prior_only_matches_prior() {
        let run = logistic_mh_run(&LogisticConfig::new(0, 3, 60_000, 9)).unwrap();
        let m = mean_vector(&run.samples);
        let c = sample_covariance(&run.samples);
        for j in 0..3 {
            assert!(m[j].abs() < 0.01, "{m}");
            assert!((c[(j, j)] / 0.01 - 1.0).abs() < 0.15, "{c}");
        }
    }

    #[test]
    fn logistic_recovers_signs() {
        let cfg = LogisticConfig::new(400, 4, 5_000, 21);
        let a = logistic_mh_generate(cfg.n_obs, cfg.p_coef, cfg.n, cfg.seed).unwrap();
        assert_eq!(a, logistic_mh_generate(cfg.n_obs, cfg.p_coef, cfg.n, cfg.seed).unwrap());
        let m = mean_vector(&a);
        let truth = cfg.true_beta();
        for j in 0..4 {
            assert_eq!(m[j].signum(), truth[j].signum(), "{m} vs {truth}");
        }
    }
}
