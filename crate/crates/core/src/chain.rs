//! Chain data model and lag-covariance computation.
//!
//! A [`SampleMatrix`] holds `n` iterations of a `p`-dimensional chain output,
//! stored column-major so that each component is a contiguous slice. Sample
//! lag covariances use the `1/n` normalisation
//!
//! ```text
//! R̂(k) = (1/n) Σ_{i=1}^{n-k} (Y_i − θ̄)(Y_{i+k} − θ̄)ᵀ,     R̂(−k) = R̂(k)ᵀ
//! ```

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// `n × p` matrix of chain outputs, rows are iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    values: DMatrix<f64>,
}

impl SampleMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::InvalidSample(format!(
                "need at least 2 iterations, got {}",
                values.nrows()
            )));
        }
        if values.ncols() < 1 {
            return Err(Error::InvalidSample("need at least one component".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let n = values.nrows();
            return Err(Error::InvalidSample(format!(
                "non-finite entry at row {}, column {}",
                pos % n,
                pos / n
            )));
        }
        Ok(Self { values })
    }

    /// Builds a matrix from row vectors (one per iteration).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidSample("rows have different lengths".into()));
        }
        let n = rows.len();
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    /// Univariate chain.
    pub fn from_series(series: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(series.len(), 1, series))
    }

    /// Builds a matrix from component columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidSample("columns have different lengths".into()));
        }
        let flat: Vec<f64> = columns.iter().flatten().copied().collect();
        Self::new(DMatrix::from_vec(n, columns.len(), flat))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.values.as_slice()[j * n..(j + 1) * n]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    /// First `len` iterations.
    pub fn head(&self, len: usize) -> Result<Self> {
        if len > self.n() {
            return Err(Error::InvalidParameter(format!(
                "prefix length {len} exceeds chain length {}",
                self.n()
            )));
        }
        Self::new(self.values.rows(0, len).into_owned())
    }

    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&j| j >= self.p()) {
            return Err(Error::InvalidParameter(format!(
                "column {bad} out of range for p = {}",
                self.p()
            )));
        }
        let cols: Vec<Vec<f64>> = columns.iter().map(|&j| self.column(j).to_vec()).collect();
        Self::from_columns(&cols)
    }

    /// Columns with their means removed.
    pub(crate) fn centered_columns(&self) -> Vec<Vec<f64>> {
        let mean = mean_vector(self);
        (0..self.p())
            .map(|j| self.column(j).iter().map(|v| v - mean[j]).collect())
            .collect()
    }
}

/// Sample lag-`k` covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LagCovariance {
    pub lag: usize,
    pub matrix: DMatrix<f64>,
}

pub fn mean_vector(s: &SampleMatrix) -> DVector<f64> {
    let n = s.n() as f64;
    DVector::from_iterator(s.p(), (0..s.p()).map(|j| s.column(j).iter().sum::<f64>() / n))
}

/// Unbiased sample covariance (divisor `n − 1`).
pub fn sample_covariance(s: &SampleMatrix) -> DMatrix<f64> {
    let z = s.centered_columns();
    let scale = 1.0 / (s.n() as f64 - 1.0);
    symmetric_from_fn(s.p(), |i, j| dot(&z[i], &z[j]) * scale)
}

pub fn lag_covariance(s: &SampleMatrix, k: usize) -> Result<LagCovariance> {
    if k >= s.n() {
        return Err(Error::LagOutOfRange { lag: k, n: s.n() });
    }
    let z = s.centered_columns();
    Ok(LagCovariance {
        lag: k,
        matrix: lag_matrix(&z, k),
    })
}

/// `R̂(k)` from centred columns by direct dot products.
pub(crate) fn lag_matrix(z: &[Vec<f64>], k: usize) -> DMatrix<f64> {
    let p = z.len();
    let n = z[0].len();
    let inv_n = 1.0 / n as f64;
    DMatrix::from_fn(p, p, |i, j| dot(&z[i][..n - k], &z[j][k..]) * inv_n)
}

/// All lag covariances `R̂(0), …, R̂(kmax)` through zero-padded FFT
/// cross-correlation of the centred columns.
pub fn lag_covariances_fft(s: &SampleMatrix, kmax: usize) -> Result<Vec<LagCovariance>> {
    let n = s.n();
    if kmax >= n {
        return Err(Error::LagOutOfRange { lag: kmax, n });
    }
    let mats = FftLags::new(s).range(0, kmax + 1);
    Ok(mats
        .into_iter()
        .enumerate()
        .map(|(lag, matrix)| LagCovariance { lag, matrix })
        .collect())
}

/// Column spectra of a chain, kept so that blocks of lag covariances can be
/// extracted repeatedly without redoing the forward transforms.
pub(crate) struct FftLags {
    n: usize,
    p: usize,
    len: usize,
    spectra: Vec<Vec<Complex<f64>>>,
}

impl FftLags {
    pub(crate) fn new(s: &SampleMatrix) -> Self {
        let n = s.n();
        let len = (2 * n).next_power_of_two();
        Self {
            n,
            p: s.p(),
            len,
            spectra: column_spectra(&s.centered_columns(), len),
        }
    }

    /// `R̂(k)` for `k` in `from..to` (clamped to `n`).
    pub(crate) fn range(&self, from: usize, to: usize) -> Vec<DMatrix<f64>> {
        let (n, p, len) = (self.n, self.p, self.len);
        let to = to.min(n);
        let mut out = vec![DMatrix::zeros(p, p); to.saturating_sub(from)];
        if out.is_empty() {
            return out;
        }
        let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).collect();
        let mut planner = FftPlanner::new();
        let ifft = planner.plan_fft_inverse(len);
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        let scale = 1.0 / (len as f64 * n as f64);
        let spectra = &self.spectra;

        // Each cross-spectrum has a real inverse, so two pairs share one
        // transform (real and imaginary parts).
        for chunk in pairs.chunks(2) {
            let (i1, j1) = chunk[0];
            let second = chunk.get(1).copied();
            for (f, slot) in buf.iter_mut().enumerate() {
                let a = spectra[i1][f].conj() * spectra[j1][f];
                let b = second.map_or(Complex::new(0.0, 0.0), |(i2, j2)| {
                    spectra[i2][f].conj() * spectra[j2][f]
                });
                *slot = a + Complex::new(-b.im, b.re);
            }
            ifft.process(&mut buf);
            for (m, k) in out.iter_mut().zip(from..to) {
                let pos = buf[k];
                let neg = buf[(len - k) % len];
                m[(i1, j1)] = pos.re * scale;
                m[(j1, i1)] = neg.re * scale;
                if let Some((i2, j2)) = second {
                    m[(i2, j2)] = pos.im * scale;
                    m[(j2, i2)] = neg.im * scale;
                }
            }
        }
        out
    }
}

/// Forward FFTs of each column zero-padded to `len`.
pub(crate) fn column_spectra(columns: &[Vec<f64>], len: usize) -> Vec<Vec<Complex<f64>>> {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(len);
    columns
        .iter()
        .map(|col| {
            let mut buf = vec![Complex::new(0.0, 0.0); len];
            for (slot, &v) in buf.iter_mut().zip(col) {
                slot.re = v;
            }
            fft.process(&mut buf);
            buf
        })
        .collect()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorise the reduction.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn symmetric_from_fn(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = f(i, j);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}
