//! Joint auto/cross `g²` fit with the identical-emitter expression.

use super::optimize::{levenberg_marquardt, Bounds, LmOptions};
use super::{FitReport, ParamSpec, Series};
use crate::analytic::{g2_fit_form, FitForm};
use crate::correlation::{jitter_kernel, FWHM_PER_SIGMA};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Parameter names understood by the `g²` model.
pub const G2_PARAMS: [&str; 8] = ["n", "xi", "gamma", "gamma_deph", "gamma_ex", "gamma_e", "gamma_s", "s"];

/// Meaning of the diffusion width `s`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum WidthConvention {
    #[default]
    StdDev,
    Fwhm,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitProblem {
    pub free: Vec<ParamSpec>,
    pub fixed: BTreeMap<String, f64>,
    /// Detector timing jitter FWHM (same time unit as the data).
    pub jitter_fwhm: f64,
    #[serde(default)]
    pub width: WidthConvention,
    #[serde(default = "default_iter")]
    pub max_iter: usize,
}

fn default_iter() -> usize {
    200
}

impl FitProblem {
    /// Free `{γ, γ', γ^ex, γ^e, N, ξ}` (SI rates), `γ^s` and `s = 2π·1 GHz`
    /// fixed.
    pub fn g2_default(jitter_fwhm: f64, gamma_s: f64) -> Self {
        let fixed = BTreeMap::from([("gamma_s".to_string(), gamma_s), ("s".to_string(), 2.0 * PI * 1e9)]);
        Self {
            free: vec![
                ParamSpec::new("gamma", 1e6, 5e9, 2e8),
                ParamSpec::new("gamma_deph", 0.0, 2e10, 3e8),
                ParamSpec::new("gamma_ex", 1e5, 5e9, 5e7),
                ParamSpec::new("gamma_e", 1e4, 1e9, 2e7),
                ParamSpec::new("n", 1.0, 200.0, 10.0),
                ParamSpec::new("xi", 0.0, 1.0, 0.2),
            ],
            fixed,
            jitter_fwhm,
            width: WidthConvention::StdDev,
            max_iter: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.free {
            if !G2_PARAMS.contains(&p.name.as_str()) {
                return Err(Error::Fit(format!("unknown parameter {}", p.name)));
            }
            if self.fixed.contains_key(&p.name) {
                return Err(Error::Fit(format!("{} is both free and fixed", p.name)));
            }
        }
        for name in G2_PARAMS {
            if !self.fixed.contains_key(name) && !self.free.iter().any(|p| p.name == name) {
                let optional = matches!(name, "gamma_e" | "gamma_s" | "s" | "gamma_deph");
                if !optional {
                    return Err(Error::Fit(format!("parameter {name} neither free nor fixed")));
                }
            }
        }
        if !(self.jitter_fwhm >= 0.0) {
            return Err(Error::Fit("jitter must be non-negative".into()));
        }
        Ok(())
    }

    fn form(&self, values: &BTreeMap<String, f64>) -> FitForm {
        let v = |k: &str| values.get(k).copied().unwrap_or(0.0);
        let s = match self.width {
            WidthConvention::StdDev => v("s"),
            WidthConvention::Fwhm => v("s") / FWHM_PER_SIGMA,
        };
        FitForm {
            n: v("n"),
            xi: v("xi"),
            gamma: v("gamma"),
            gamma_deph: v("gamma_deph"),
            gamma_ex: v("gamma_ex"),
            gamma_e: v("gamma_e"),
            gamma_s: v("gamma_s"),
            s,
        }
    }
}

/// Model `g²` at delays `taus`, convolved with the jitter kernel.
pub fn g2_model_curve(form: &FitForm, cross: bool, taus: &[f64], jitter_fwhm: f64) -> Vec<f64> {
    if jitter_fwhm <= 0.0 {
        return taus.iter().map(|&t| g2_fit_form(form, cross, t)).collect();
    }
    let kernel = jitter_kernel(jitter_fwhm);
    taus.iter()
        .map(|&t| kernel.iter().map(|&(u, w)| w * g2_fit_form(form, cross, t - u)).sum())
        .collect()
}

/// Weighted least squares on both channels; `ξ` only enters `ab`. Without
/// cross data only the auto-correlation is fitted.
pub fn fit_g2(aa: &Series, ab: Option<&Series>, problem: &FitProblem) -> Result<FitReport> {
    aa.validate()?;
    if let Some(ab) = ab {
        ab.validate()?;
    }
    problem.validate()?;
    let names: Vec<String> = problem.free.iter().map(|p| p.name.clone()).collect();
    let bounds = Bounds::new(
        problem.free.iter().map(|p| p.lower).collect(),
        problem.free.iter().map(|p| p.upper).collect(),
    )?;
    let x0: Vec<f64> = problem.free.iter().map(|p| p.init).collect();
    let values = |x: &[f64]| {
        let mut v = problem.fixed.clone();
        for (n, xv) in names.iter().zip(x) {
            v.insert(n.clone(), *xv);
        }
        v
    };
    let residuals = |x: &[f64]| -> Result<Vec<f64>> {
        let form = problem.form(&values(x));
        let mut r: Vec<f64> = g2_model_curve(&form, false, &aa.x, problem.jitter_fwhm)
            .iter()
            .zip(aa.y.iter().zip(&aa.w))
            .map(|(m, (y, w))| (m - y) * w)
            .collect();
        if let Some(ab) = ab {
            r.extend(
                g2_model_curve(&form, true, &ab.x, problem.jitter_fwhm)
                    .iter()
                    .zip(ab.y.iter().zip(&ab.w))
                    .map(|(m, (y, w))| (m - y) * w),
            );
        }
        Ok(r)
    };
    let opts = LmOptions {
        max_iter: problem.max_iter,
        ..LmOptions::default()
    };
    let r = levenberg_marquardt(residuals, &x0, &bounds, opts)?;
    let mut flags = Vec::new();
    if ab.is_none() && names.iter().any(|n| n == "xi") {
        flags.push("xi free without cross-correlation data".into());
    }
    Ok(FitReport::from_lsq(&r, &names, &problem.fixed, flags))
}
