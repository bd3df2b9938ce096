//! Small dense helpers: pivot-checked Cholesky, log-determinants and
//! eigenvalue clipping for symmetric matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative pivot tolerance used by the positive-definiteness test.
pub const PD_TOLERANCE: f64 = 1e-10;

/// Lower-triangular Cholesky factor of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: DMatrix<f64>,
}

impl Cholesky {
    /// Factorises `m`, failing if any pivot drops below
    /// `PD_TOLERANCE × max diagonal entry`.
    pub fn new(m: &DMatrix<f64>) -> Option<Self> {
        let p = m.nrows();
        if p == 0 || m.ncols() != p {
            return None;
        }
        let scale = (0..p).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
        if !(scale > 0.0) || !scale.is_finite() {
            return None;
        }
        let floor = PD_TOLERANCE * scale;
        let mut l = DMatrix::<f64>::zeros(p, p);
        for j in 0..p {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > floor) {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..p {
                let mut v = 0.5 * (m[(i, j)] + m[(j, i)]);
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / d;
            }
        }
        Some(Self { lower: l })
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// `xᵀ M⁻¹ x` by forward substitution.
    pub fn inverse_quadratic(&self, x: &DVector<f64>) -> f64 {
        let p = self.lower.nrows();
        let mut y = vec![0.0; p];
        for i in 0..p {
            let mut v = x[i];
            for k in 0..i {
                v -= self.lower[(i, k)] * y[k];
            }
            y[i] = v / self.lower[(i, i)];
        }
        y.iter().map(|v| v * v).sum()
    }
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    Cholesky::new(m).is_some()
}

/// Positive semidefinite up to `1e-12` relative to the spectral radius.
pub fn is_positive_semidefinite(m: &DMatrix<f64>) -> bool {
    if m.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let eig = SymmetricEigen::new(symmetrize(m)).eigenvalues;
    let max_abs = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    eig.iter().all(|&v| v >= -1e-12 * max_abs.max(f64::MIN_POSITIVE))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Replaces negative eigenvalues of a symmetric matrix by zero.
pub fn clip_negative_eigenvalues(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let q = &eig.eigenvectors;
    symmetrize(&(q * DMatrix::from_diagonal(&clipped) * q.transpose()))
}

/// Symmetric positive square root `B` with `B B = M`.
pub fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    symmetrize(&(q * DMatrix::from_diagonal(&roots) * q.transpose()))
}
