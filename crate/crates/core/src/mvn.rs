//! Rectangle probabilities of the multivariate normal distribution by
//! randomized lattice integration of the sequential-conditioning form.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::linalg::Cholesky;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        f64::NEG_INFINITY
    } else if u >= 1.0 {
        f64::INFINITY
    } else {
        -SQRT_2 * erfc_inv(2.0 * u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnOptions {
    /// Target standard error of the probability estimate.
    pub tol: f64,
    /// Seed of the random lattice shifts.
    pub seed: u64,
    /// Number of independent random shifts; the standard error is taken
    /// across them.
    pub shifts: usize,
    /// Lattice size of the first pass; doubled until `tol` is met.
    pub initial_points: usize,
    pub max_points: usize,
}

impl Default for MvnOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            seed: 0x6d76_6e5f_7265_6374,
            shifts: 12,
            initial_points: 128,
            max_points: 1 << 20,
        }
    }
}

impl MvnOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnProbability {
    pub prob: f64,
    pub std_error: f64,
    /// Integrand evaluations used in the final pass.
    pub evaluations: usize,
}

/// Square roots of the first primes; their fractional parts generate the
/// Richtmyer lattice.
const PRIMES: [u32; 48] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223,
];

fn richtmyer(dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|j| {
            let p = PRIMES
                .get(j)
                .map(|&p| p as f64)
                .unwrap_or_else(|| PRIMES[PRIMES.len() - 1] as f64 + 2.0 * j as f64 + 1.0);
            p.sqrt().fract()
        })
        .collect()
}

/// Cholesky factor and bounds after reordering variables so that the
/// narrowest marginal intervals are conditioned on first.
struct Prepared {
    l: DMatrix<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

fn prepare(center: &DVector<f64>, cov: &DMatrix<f64>, rect: &[(f64, f64)]) -> Result<Prepared> {
    let p = center.len();
    let sd: Vec<f64> = (0..p).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    let marginal = |i: usize| {
        normal_cdf((rect[i].1 - center[i]) / sd[i]) - normal_cdf((rect[i].0 - center[i]) / sd[i])
    };
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| marginal(a).total_cmp(&marginal(b)));
    let permuted = DMatrix::from_fn(p, p, |i, j| cov[(order[i], order[j])]);
    let chol = Cholesky::new(&permuted)
        .ok_or_else(|| Error::NotPositiveDefinite("normal covariance".into()))?;
    Ok(Prepared {
        l: chol.lower().clone(),
        lower: order.iter().map(|&i| rect[i].0 - center[i]).collect(),
        upper: order.iter().map(|&i| rect[i].1 - center[i]).collect(),
    })
}

impl Prepared {
    /// Integrand over `[0,1]^{p-1}`: the product of conditional interval
    /// probabilities along one path of the sequential construction.
    fn integrand(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let p = self.lower.len();
        let mut prob = 1.0;
        for i in 0..p {
            let mut shift = 0.0;
            for j in 0..i {
                shift += self.l[(i, j)] * y[j];
            }
            let lii = self.l[(i, i)];
            let d = normal_cdf((self.lower[i] - shift) / lii);
            let e = normal_cdf((self.upper[i] - shift) / lii);
            prob *= e - d;
            if prob <= 0.0 {
                return 0.0;
            }
            if i + 1 < p {
                let u = d + w[i] * (e - d);
                y[i] = normal_quantile(u.clamp(1e-300, 1.0 - 1e-16));
            }
        }
        prob
    }
}

/// `P(lo_i < U_i < hi_i for all i)` for `U ~ N(center, cov)`.
///
/// Exact for `p = 1`. Otherwise the estimate averages `shifts`
/// independently shifted rank-1 lattice rules, doubling the lattice size
/// until the standard error across shifts is at most `opts.tol` (or
/// `opts.max_points` is reached). Deterministic given `opts.seed`.
pub fn mvn_rect_prob(
    center: &DVector<f64>,
    cov: &DMatrix<f64>,
    rect: &[(f64, f64)],
    opts: &MvnOptions,
) -> Result<MvnProbability> {
    let p = center.len();
    if p == 0 || cov.nrows() != p || cov.ncols() != p || rect.len() != p {
        return Err(Error::InvalidParameter("dimension mismatch in rectangle probability".into()));
    }
    if !(opts.tol > 0.0) || opts.shifts < 2 {
        return Err(Error::InvalidParameter("need tol > 0 and at least two shifts".into()));
    }
    if rect.iter().any(|(lo, hi)| lo.is_nan() || hi.is_nan()) {
        return Err(Error::InvalidParameter("NaN rectangle bound".into()));
    }
    if rect.iter().any(|(lo, hi)| hi <= lo) {
        return Ok(MvnProbability { prob: 0.0, std_error: 0.0, evaluations: 0 });
    }
    let prep = prepare(center, cov, rect)?;
    if p == 1 {
        let prob = prep.integrand(&[], &mut [0.0]);
        return Ok(MvnProbability { prob, std_error: 0.0, evaluations: 1 });
    }

    let dim = p - 1;
    let gen = richtmyer(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let shifts: Vec<Vec<f64>> = (0..opts.shifts)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();

    let mut w = vec![0.0; dim];
    let mut y = vec![0.0; p];
    let mut points = opts.initial_points.max(1);
    loop {
        let means: Vec<f64> = shifts
            .iter()
            .map(|shift| {
                let mut acc = 0.0;
                for k in 1..=points {
                    for j in 0..dim {
                        // baker's transform symmetrises the periodic extension
                        let x = (k as f64 * gen[j] + shift[j]).fract();
                        w[j] = 1.0 - (2.0 * x - 1.0).abs();
                    }
                    acc += prep.integrand(&w, &mut y);
                }
                acc / points as f64
            })
            .collect();
        let m = means.len() as f64;
        let prob = means.iter().sum::<f64>() / m;
        let var = means.iter().map(|v| (v - prob).powi(2)).sum::<f64>() / (m - 1.0);
        let std_error = (var / m).sqrt();
        if std_error <= opts.tol || points >= opts.max_points {
            return Ok(MvnProbability {
                prob: prob.clamp(0.0, 1.0),
                std_error,
                evaluations: points * shifts.len(),
            });
        }
        points *= 2;
    }
}
