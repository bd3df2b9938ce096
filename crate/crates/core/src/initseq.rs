//! Multivariate initial-sequence estimators for reversible chains.
//!
//! Partial sums `Σ_{n,m} = −R̂(0) + 2 Σ_{i≤m} Â_i` of adjacent lag pairs
//! `Â_i = sym R̂(2i) + sym R̂(2i+1)` are scanned in order. The scan starts at
//! the first positive-definite partial sum `s_n` and continues while each
//! next partial sum stays positive definite with a strictly larger
//! determinant; the last such index is `t_n`.
//!
//! The first lag covariances are computed directly, so short scans cost
//! only a few passes over the data; longer scans fetch further lags in
//! growing blocks by FFT cross-correlation.

use nalgebra::DMatrix;

use crate::chain::{lag_matrix, FftLags, SampleMatrix};
use crate::error::{Error, Result};
use crate::estimate::{Family, LrvEstimate, MethodInfo};
use crate::linalg::{clip_negative_eigenvalues, symmetrize, Cholesky};

#[derive(Debug, Clone, PartialEq)]
pub struct InitSeqResult {
    pub sigma: DMatrix<f64>,
    /// First index with a positive-definite partial sum.
    pub s_n: usize,
    /// Chosen truncation index.
    pub t_n: usize,
    /// Log-determinants of the unadjusted partial sums for `m = s_n..=t_n`.
    pub logdet_path: Vec<f64>,
    pub adjusted: bool,
}

impl InitSeqResult {
    pub fn into_estimate(self, n: usize) -> LrvEstimate {
        let family = if self.adjusted {
            Family::AdjustedInitialSequence
        } else {
            Family::InitialSequence
        };
        let mut method = MethodInfo::new(family, n);
        method.truncation = Some(self.t_n);
        LrvEstimate::new(self.sigma, method)
    }
}

/// Largest admissible truncation index `⌊n/2 − 1⌋`.
fn max_index(n: usize) -> usize {
    n / 2 - 1
}

/// `Â_0, …, Â_mmax`.
pub fn adjacent_pair_sums(s: &SampleMatrix, mmax: usize) -> Result<Vec<DMatrix<f64>>> {
    if 2 * mmax + 1 > s.n() - 1 {
        return Err(Error::LagOutOfRange { lag: 2 * mmax + 1, n: s.n() });
    }
    let z = s.centered_columns();
    Ok((0..=mmax).map(|i| pair_sum(&z, i)).collect())
}

fn pair_sum(z: &[Vec<f64>], i: usize) -> DMatrix<f64> {
    symmetrize(&lag_matrix(z, 2 * i)) + symmetrize(&lag_matrix(z, 2 * i + 1))
}

/// Lags below this are computed directly.
const DIRECT_LAGS: usize = 4;

/// Supplies `Â_i` in increasing `i`, switching from direct lag products to
/// FFT blocks once the scan runs past [`DIRECT_LAGS`].
struct PairSums<'a> {
    s: &'a SampleMatrix,
    z: Vec<Vec<f64>>,
    fft: Option<FftLags>,
    /// Lags `block_start..block_start + block.len()`.
    block_start: usize,
    block: Vec<DMatrix<f64>>,
}

impl<'a> PairSums<'a> {
    fn new(s: &'a SampleMatrix) -> Self {
        Self { s, z: s.centered_columns(), fft: None, block_start: 0, block: Vec::new() }
    }

    fn lag(&mut self, k: usize) -> DMatrix<f64> {
        if k < DIRECT_LAGS {
            return lag_matrix(&self.z, k);
        }
        if k < self.block_start || k >= self.block_start + self.block.len() {
            let s = self.s;
            let fft = self.fft.get_or_insert_with(|| FftLags::new(s));
            // Blocks grow geometrically so the number of transforms stays
            // logarithmic in the final truncation.
            let size = k.max(64);
            self.block = fft.range(k, k + size);
            self.block_start = k;
        }
        self.block[k - self.block_start].clone()
    }

    fn get(&mut self, i: usize) -> DMatrix<f64> {
        symmetrize(&self.lag(2 * i)) + symmetrize(&self.lag(2 * i + 1))
    }
}

struct Scan {
    s_n: usize,
    t_n: usize,
    path: Vec<f64>,
    /// Σ_{n, s_n}
    start: DMatrix<f64>,
    /// Σ_{n, t_n}
    end: DMatrix<f64>,
    /// Â_i for i in (s_n, t_n]
    increments: Vec<DMatrix<f64>>,
}

fn scan(s: &SampleMatrix) -> Result<Scan> {
    let n = s.n();
    if n < 4 {
        return Err(Error::InvalidSample(format!(
            "initial sequence estimators need at least 4 iterations, got {n}"
        )));
    }
    let mut sums = PairSums::new(s);
    let last = max_index(n);
    let r0 = sums.lag(0);

    let mut partial = -&r0;
    let mut found: Option<(usize, f64, DMatrix<f64>)> = None;
    for m in 0..=last {
        partial += sums.get(m) * 2.0;
        if let Some(chol) = Cholesky::new(&partial) {
            found = Some((m, chol.log_det(), partial.clone()));
            break;
        }
    }
    let (s_n, logdet, start) = found.ok_or(Error::NoPdTruncation { max_m: last })?;

    let mut path = vec![logdet];
    let mut current = start.clone();
    let mut increments = Vec::new();
    let mut t_n = s_n;
    for m in (s_n + 1)..=last {
        let a = sums.get(m);
        let next = &current + &a * 2.0;
        match Cholesky::new(&next) {
            Some(chol) if chol.log_det() > *path.last().unwrap() => {
                path.push(chol.log_det());
                current = next;
                increments.push(a);
                t_n = m;
            }
            _ => break,
        }
    }
    Ok(Scan { s_n, t_n, path, start, end: current, increments })
}

/// Initial-sequence estimate `Σ_{n, t_n}`.
pub fn initial_sequence(s: &SampleMatrix) -> Result<InitSeqResult> {
    let sc = scan(s)?;
    Ok(InitSeqResult {
        sigma: symmetrize(&sc.end),
        s_n: sc.s_n,
        t_n: sc.t_n,
        logdet_path: sc.path,
        adjusted: false,
    })
}

/// Adjusted variant: the truncation `(s_n, t_n)` of the unadjusted scan is
/// kept, and each increment `2Â_i`, `i ∈ (s_n, t_n]`, is replaced by its
/// positive part (negative eigenvalues set to zero).
pub fn adjusted_initial_sequence(s: &SampleMatrix) -> Result<InitSeqResult> {
    let sc = scan(s)?;
    let mut sigma = sc.start;
    for a in &sc.increments {
        sigma += clip_negative_eigenvalues(a) * 2.0;
    }
    Ok(InitSeqResult {
        sigma: symmetrize(&sigma),
        s_n: sc.s_n,
        t_n: sc.t_n,
        logdet_path: sc.path,
        adjusted: true,
    })
}
