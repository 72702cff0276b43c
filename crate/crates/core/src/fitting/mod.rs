//! Parameter extraction from coincidence data and transport traces.

mod g2;
pub mod optimize;
mod transport;

pub use g2::{fit_g2, g2_model_curve, FitProblem, WidthConvention, G2_PARAMS};
pub use optimize::{gauss_hermite, levenberg_marquardt, nelder_mead, Bounds, LmOptions, LsqResult};
pub use transport::{
    backscatter_trace, constructive_phase, fit_backscatter, fit_strong_coupling, strong_coupling_trace, BackscatterFit,
    BackscatterSetup, DrivePulse, StrongCouplingFit, StrongCouplingSetup,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Samples `(x, y)` with weights `1/σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
}

impl Series {
    pub fn new(x: Vec<f64>, y: Vec<f64>, w: Option<Vec<f64>>) -> Result<Self> {
        let w = w.unwrap_or_else(|| vec![1.0; x.len()]);
        let s = Self { x, y, w };
        s.validate()?;
        Ok(s)
    }

    /// Normalized coincidences with Poisson weights: `y = c / norm`,
    /// `σ = √max(c, 1) / norm`.
    pub fn from_counts(x: Vec<f64>, counts: &[f64], norm: f64) -> Result<Self> {
        if !(norm > 0.0) {
            return Err(Error::Fit("normalization must be positive".into()));
        }
        let y = counts.iter().map(|c| c / norm).collect();
        let w = counts.iter().map(|c| norm / c.max(1.0).sqrt()).collect();
        Self::new(x, y, Some(w))
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::Fit("empty data".into()));
        }
        if self.y.len() != self.x.len() || self.w.len() != self.x.len() {
            return Err(Error::Fit("x, y and weights differ in length".into()));
        }
        if self.w.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::Fit("weights must be positive".into()));
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::Fit("non-finite data".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub init: f64,
}

impl ParamSpec {
    pub fn new(name: &str, lower: f64, upper: f64, init: f64) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            init,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub params: BTreeMap<String, f64>,
    pub free: Vec<String>,
    /// Covariance of the free parameters, in the order of `free`.
    pub covariance: Option<Vec<Vec<f64>>>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub flags: Vec<String>,
}

impl FitReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    /// One-sigma uncertainty of a free parameter.
    pub fn stderr(&self, name: &str) -> Option<f64> {
        let k = self.free.iter().position(|n| n == name)?;
        self.covariance.as_ref().map(|c| c[k][k].max(0.0).sqrt())
    }

    pub(crate) fn from_lsq(r: &LsqResult, names: &[String], fixed: &BTreeMap<String, f64>, flags: Vec<String>) -> Self {
        let mut params = fixed.clone();
        for (n, v) in names.iter().zip(&r.x) {
            params.insert(n.clone(), *v);
        }
        let mut flags = flags;
        for k in r.flat_directions() {
            flags.push(format!("{} unidentifiable (flat objective)", names[k]));
        }
        if !r.converged {
            flags.push(format!("not converged after {} iterations; best-so-far returned", r.iterations));
        }
        Self {
            params,
            free: names.to_vec(),
            covariance: r.covariance(),
            residual_norm: (2.0 * r.cost).sqrt(),
            iterations: r.iterations,
            converged: r.converged,
            flags,
        }
    }
}

/// Upper bound on pure dephasing from two-photon interference visibility:
/// `V = Γ/(γ' + Γ)` ⇒ `γ' = Γ(1 − V)/V`.
pub fn hom_dephasing_bound(visibility: f64, gamma: f64) -> Result<f64> {
    if !(visibility > 0.0 && visibility <= 1.0) {
        return Err(Error::Domain(format!("visibility {visibility} outside (0, 1]")));
    }
    if !(gamma > 0.0) {
        return Err(Error::Domain("rate must be positive".into()));
    }
    Ok(gamma * (1.0 - visibility) / visibility)
}
