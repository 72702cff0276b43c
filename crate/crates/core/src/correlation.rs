//! Correlation-curve containers, delay grids and detector-jitter smoothing.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// FWHM of a Gaussian divided by its standard deviation.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    pub order: u8,
    /// Detection order, e.g. `["a", "b"]` means `a` at 0 and `b` at `τ`.
    pub channels: Vec<String>,
    /// Denominator used for normalization (product of intensities).
    pub normalization: f64,
    /// Free-form diagnostic flags (non-stationary state, truncation, ...).
    #[serde(default)]
    pub flags: Vec<String>,
}

impl CorrelationCurve {
    pub fn label(&self) -> String {
        self.channels.join("")
    }

    /// Linear interpolation; clamps outside the grid.
    pub fn at(&self, tau: f64) -> f64 {
        interp(&self.taus, &self.values, tau)
    }

    pub fn is_symmetric_grid(&self) -> bool {
        symmetric(&self.taus)
    }

    /// The curve with `τ → −τ` (what the reversed channel order measures).
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        out.taus = self.taus.iter().rev().map(|t| -t).collect();
        out.values = self.values.iter().rev().copied().collect();
        out.channels.reverse();
        out
    }

    pub fn convolved(&self, fwhm: f64) -> Self {
        let mut out = self.clone();
        out.values = jitter_convolve(&self.taus, &self.values, fwhm);
        out.flags.push(format!("jitter_fwhm={fwhm:e}"));
        out
    }
}

/// Third-order correlation on a 2-D grid: `x` detected at 0, `y` at `τ₁`,
/// `z` at `τ₂`. Values are row-major in `tau1s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSurface {
    pub tau1s: Vec<f64>,
    pub tau2s: Vec<f64>,
    pub values: Vec<f64>,
    pub channels: Vec<String>,
    pub normalization: f64,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl CorrelationSurface {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.tau2s.len() + j]
    }
}

fn symmetric(taus: &[f64]) -> bool {
    let n = taus.len();
    if n == 0 {
        return false;
    }
    let scale = taus.iter().map(|t| t.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    (0..n).all(|i| (taus[i] + taus[n - 1 - i]).abs() <= 1e-12 * scale)
}

pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let w = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
    ys[k - 1] * (1.0 - w) + ys[k] * w
}

/// Non-negative delays: zero, then logarithmic spacing up to a tenth of
/// `tau_max`, then linear spacing. `n` points in total.
pub fn default_tau_grid(tau_max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 4 && tau_max > 0.0);
    let n_log = (n - 1) / 2;
    let n_lin = n - 1 - n_log;
    let t_split = 0.1 * tau_max;
    let t_min = 1e-3 * tau_max;
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    for k in 0..n_log {
        let f = k as f64 / n_log as f64;
        out.push(t_min * (t_split / t_min).powf(f));
    }
    for k in 1..=n_lin {
        out.push(t_split + (tau_max - t_split) * k as f64 / n_lin as f64);
    }
    out
}

/// Uniform grid on `[0, tau_max]`.
pub fn linear_grid(tau_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| tau_max * k as f64 / (n - 1) as f64).collect()
}

/// Symmetric grid `[-p_max .. 0 .. p_max]` from a non-negative grid whose
/// first element is zero.
pub fn symmetric_taus(pos: &[f64]) -> Vec<f64> {
    pos.iter()
        .skip(1)
        .rev()
        .map(|t| -t)
        .chain(pos.iter().copied())
        .collect()
}

/// Chirality metric: `max_τ |g(τ) − g(−τ)|` over a grid symmetric about 0.
pub fn chirality_metric(curve: &CorrelationCurve) -> Result<f64> {
    if !curve.is_symmetric_grid() {
        return Err(Error::AsymmetricGrid);
    }
    let n = curve.values.len();
    Ok((0..n)
        .map(|i| (curve.values[i] - curve.values[n - 1 - i]).abs())
        .fold(0.0, f64::max))
}

/// Maximum absolute difference of two curves on the same grid.
pub fn max_deviation(a: &CorrelationCurve, b: &CorrelationCurve) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Normalized trapezoid nodes `(u, w)` of a Gaussian kernel with the given
/// FWHM over ±6σ (`Σ w = 1`).
pub fn jitter_kernel(fwhm: f64) -> Vec<(f64, f64)> {
    let sigma = fwhm / FWHM_PER_SIGMA;
    const M: usize = 241;
    let half = 6.0 * sigma;
    let du = 2.0 * half / (M - 1) as f64;
    let raw: Vec<(f64, f64)> = (0..M)
        .map(|k| {
            let u = -half + k as f64 * du;
            let w = if k == 0 || k == M - 1 { 0.5 } else { 1.0 };
            (u, w * (-0.5 * (u / sigma).powi(2)).exp())
        })
        .collect();
    let norm: f64 = raw.iter().map(|k| k.1).sum();
    raw.into_iter().map(|(u, w)| (u, w / norm)).collect()
}

/// Convolution with a normalized Gaussian of the given FWHM, evaluated by
/// trapezoid quadrature over ±6σ with linear interpolation of the samples.
/// Samples outside the grid are clamped to the end values.
pub fn jitter_convolve(taus: &[f64], values: &[f64], fwhm: f64) -> Vec<f64> {
    if fwhm <= 0.0 {
        return values.to_vec();
    }
    let kernel = jitter_kernel(fwhm);
    taus.iter()
        .map(|&t| kernel.iter().map(|&(u, w)| w * interp(taus, values, t - u)).sum())
        .collect()
}
