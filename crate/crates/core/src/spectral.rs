//! Lag windows and the multivariate spectral-variance estimator
//!
//! ```text
//! Σ̇ = Σ_{|s|<n} κ(s/b) R̂(s),     R̂(−s) = R̂(s)ᵀ
//! ```
//!
//! The weighted lag sum is evaluated in the frequency domain: with the
//! centred columns zero-padded to length `N ≥ n + L` (L the last lag with a
//! non-zero weight), the circular cross-correlations agree with the linear
//! ones on `|s| ≤ L`, so by Parseval the estimate is
//! `(1/(nN)) Σ_f W(f) Re(conj(Z_i(f)) Z_j(f))` where `W` is the DFT of the
//! circularly arranged weights. No inverse transforms are needed.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::batch::check_lugsail;
use crate::chain::{column_spectra, SampleMatrix};
use crate::error::{Error, Result};
use crate::estimate::{Family, LrvEstimate, LugsailParams, MethodInfo};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagWindow {
    Bartlett,
    BartlettFlatTop,
    TukeyHanning,
    QuadraticSpectral,
    /// `κ_L(x) = κ(x)/(1−c) − c·κ(rx)/(1−c)`.
    Lugsail { base: Box<LagWindow>, r: f64, c: f64 },
}

/// Behaviour of `1 − κ(x)` near zero: `k_q = lim (1 − κ(x)) / |x|^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothness {
    pub q: u32,
    pub k_q: f64,
}

/// `18π²/125`, the curvature of the quadratic-spectral window at zero.
const QS_K2: f64 = 18.0 * PI * PI / 125.0;

impl LagWindow {
    pub fn lugsail(base: LagWindow, r: f64, c: f64) -> Result<Self> {
        check_lugsail(r, c)?;
        Ok(LagWindow::Lugsail { base: Box::new(base), r, c })
    }

    pub fn value(&self, x: f64) -> f64 {
        let ax = x.abs();
        match self {
            LagWindow::Bartlett => {
                if ax <= 1.0 {
                    1.0 - ax
                } else {
                    0.0
                }
            }
            LagWindow::BartlettFlatTop => {
                if ax <= 0.5 {
                    1.0
                } else if ax <= 1.0 {
                    2.0 * (1.0 - ax)
                } else {
                    0.0
                }
            }
            LagWindow::TukeyHanning => {
                if ax <= 1.0 {
                    0.5 + 0.5 * (PI * ax).cos()
                } else {
                    0.0
                }
            }
            LagWindow::QuadraticSpectral => quadratic_spectral(ax),
            LagWindow::Lugsail { base, r, c } => {
                (base.value(x) - c * base.value(r * x)) / (1.0 - c)
            }
        }
    }

    /// Largest `|x|` with `κ(x) ≠ 0` (infinite for quadratic spectral).
    pub fn support_bound(&self) -> f64 {
        match self {
            LagWindow::Bartlett | LagWindow::BartlettFlatTop | LagWindow::TukeyHanning => 1.0,
            LagWindow::QuadraticSpectral => f64::INFINITY,
            // κ(rx) vanishes first since r ≥ 1
            LagWindow::Lugsail { base, .. } => base.support_bound(),
        }
    }

    pub fn smoothness(&self) -> Smoothness {
        match self {
            LagWindow::Bartlett => Smoothness { q: 1, k_q: 1.0 },
            LagWindow::BartlettFlatTop => Smoothness { q: 1, k_q: 0.0 },
            LagWindow::TukeyHanning => Smoothness { q: 2, k_q: PI * PI / 4.0 },
            LagWindow::QuadraticSpectral => Smoothness { q: 2, k_q: QS_K2 },
            LagWindow::Lugsail { base, r, c } => {
                let s = base.smoothness();
                let k_q = s.k_q * (1.0 - c * r.powi(s.q as i32)) / (1.0 - c);
                Smoothness { q: s.q, k_q: if k_q.abs() < 1e-15 { 0.0 } else { k_q } }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            LagWindow::Bartlett => "bartlett".into(),
            LagWindow::BartlettFlatTop => "bartlett_flattop".into(),
            LagWindow::TukeyHanning => "tukey_hanning".into(),
            LagWindow::QuadraticSpectral => "quadratic_spectral".into(),
            LagWindow::Lugsail { base, r, c } => format!("lugsail({}, r={r}, c={c})", base.name()),
        }
    }
}

fn quadratic_spectral(ax: f64) -> f64 {
    let u = 6.0 * PI * ax / 5.0;
    if u < 0.05 {
        // series of 3(sin u / u − cos u)/u² = 1 − u²/10 + u⁴/280 − u⁶/15120
        let u2 = u * u;
        1.0 - u2 / 10.0 + u2 * u2 / 280.0 - u2 * u2 * u2 / 15120.0
    } else {
        25.0 / (12.0 * PI * PI * ax * ax) * (u.sin() / u - u.cos())
    }
}

pub fn window_value(w: &LagWindow, x: f64) -> f64 {
    w.value(x)
}

pub fn lugsail_window(base: LagWindow, r: f64, c: f64) -> Result<LagWindow> {
    LagWindow::lugsail(base, r, c)
}

pub fn window_smoothness(w: &LagWindow) -> Smoothness {
    w.smoothness()
}

/// Spectral-variance estimate with lag window `w` and truncation point `b`.
pub fn spectral_variance(s: &SampleMatrix, w: &LagWindow, b: usize) -> Result<LrvEstimate> {
    let n = s.n();
    if b == 0 || b >= n {
        return Err(Error::InvalidParameter(format!(
            "truncation point {b} must lie in [1, {}]",
            n - 1
        )));
    }
    let sigma = weighted_lag_sum(s, w, b as f64);
    let mut method = MethodInfo::new(Family::SpectralVariance, n);
    method.batch_size = Some(b);
    method.window = Some(w.clone());
    if let LagWindow::Lugsail { r, c, .. } = w {
        method.lugsail = Some(LugsailParams { r: *r, c: *c });
    }
    Ok(LrvEstimate::new(sigma, method))
}

/// Lugsail spectral variance: the combination
/// `(1/(1−c))·Σ̇_b − (c/(1−c))·Σ̇_{b/r}` of two spectral-variance estimates,
/// which coincides with a single estimate under the lugsail window. The
/// second truncation point `b/r` is kept real-valued, so `r` need not
/// divide `b`.
pub fn lugsail_spectral_variance(
    s: &SampleMatrix,
    base: &LagWindow,
    b: usize,
    r: f64,
    c: f64,
) -> Result<LrvEstimate> {
    check_lugsail(r, c)?;
    let mut out = spectral_variance(s, base, b)?;
    if (b as f64 / r).floor() < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "floor(b/r) must be at least 1 (b = {b}, r = {r})"
        )));
    }
    out.method.window = Some(LagWindow::lugsail(base.clone(), r, c)?);
    out.method.lugsail = Some(LugsailParams { r, c });
    if c == 0.0 || r == 1.0 {
        return Ok(out);
    }
    let small = weighted_lag_sum(s, base, b as f64 / r);
    let sigma = &out.sigma / (1.0 - c) - small * (c / (1.0 - c));
    Ok(LrvEstimate::new(sigma, out.method))
}

/// `Σ_{|s|<n} κ(s/bandwidth) R̂(s)` through the frequency domain.
pub(crate) fn weighted_lag_sum(s: &SampleMatrix, w: &LagWindow, bandwidth: f64) -> DMatrix<f64> {
    let n = s.n();
    let p = s.p();
    let support = w.support_bound();
    let last_lag = if support.is_finite() {
        ((support * bandwidth).ceil() as usize).min(n - 1)
    } else {
        n - 1
    };

    let len = (n + last_lag).next_power_of_two().max(2);
    let mut weights = vec![Complex::new(0.0, 0.0); len];
    weights[0].re = w.value(0.0);
    for m in 1..=last_lag {
        let v = w.value(m as f64 / bandwidth);
        weights[m].re = v;
        weights[len - m].re = v;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut weights);
    // symmetric real weights have a real transform
    let wf: Vec<f64> = weights.iter().map(|c| c.re).collect();

    let spectra = column_spectra(&s.centered_columns(), len);
    let half = len / 2;
    let scale = 1.0 / (n as f64 * len as f64);
    crate::chain::symmetric_from_fn(p, |i, j| {
        let (zi, zj) = (&spectra[i], &spectra[j]);
        let term = |f: usize| wf[f] * (zi[f].re * zj[f].re + zi[f].im * zj[f].im);
        // conjugate symmetry: bins f and len − f contribute equally
        let mut acc = term(0) + term(half);
        let mut inner = 0.0;
        for f in 1..half {
            inner += term(f);
        }
        acc += 2.0 * inner;
        acc * scale
    })
}
