//! On-disk configuration: a versioned JSON tree with sections `emitters`,
//! `cavity`, `kerr` and `numerics`. Rates and frequencies are given in MHz
//! (converted to rad/s with 2π·10⁶), phases in units of π and times in ns.

use crate::bosonic::QuadraticModel;
use crate::error::{Error, Result};
use crate::kerr::{PumpPulse, PumpShape};
use crate::model::{CavityParams, EmitterParams, KerrParams, SystemConfig};
use crate::space::DEFAULT_DIM_CAP;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;
/// rad/s per MHz.
pub const MHZ: f64 = 2.0 * PI * 1e6;
pub const NS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    pub emitters: Vec<EmitterEntry>,
    pub cavity: CavityEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kerr: Option<KerrEntry>,
    #[serde(default)]
    pub numerics: Numerics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterEntry {
    #[serde(default)]
    pub delta: f64,
    pub g: f64,
    /// Units of π.
    #[serde(default)]
    pub phi: f64,
    pub gamma: f64,
    #[serde(default)]
    pub gamma_deph: f64,
    #[serde(default)]
    pub gamma_ex: f64,
    #[serde(default)]
    pub gamma_e: f64,
    #[serde(default)]
    pub gamma_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityEntry {
    #[serde(default)]
    pub kappa_i: f64,
    pub kappa_c: f64,
    #[serde(default)]
    pub g_bs: f64,
    #[serde(default)]
    pub detuning: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KerrEntry {
    pub g_kerr: f64,
    #[serde(default)]
    pub omega_idler: f64,
    pub pump: PumpEntry,
}

/// Pump description. Input amplitudes are `√(photons/ns)`, intracavity
/// amplitudes `√photons`. Exactly one of `gaussian` / `samples`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpEntry {
    #[serde(default = "default_shape")]
    pub shape: PumpShape,
    pub kappa: f64,
    #[serde(default)]
    pub kappa_c: f64,
    #[serde(default)]
    pub detuning: f64,
    pub rep_period_ns: f64,
    pub dt_ns: f64,
    #[serde(default)]
    pub t0_ns: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<GaussianPump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 2]>>,
}

fn default_shape() -> PumpShape {
    PumpShape::Input
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPump {
    pub peak: f64,
    pub fwhm_ns: f64,
    pub center_ns: f64,
    pub t_end_ns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_cutoff")]
    pub fock_cutoff: usize,
    #[serde(default = "default_cap")]
    pub dim_cap: usize,
    /// Largest delay; a multiple of the slowest rate if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_max_ns: Option<f64>,
    #[serde(default = "default_points")]
    pub tau_points: usize,
}

fn default_cutoff() -> usize {
    2
}
fn default_cap() -> usize {
    DEFAULT_DIM_CAP
}
fn default_points() -> usize {
    400
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            fock_cutoff: default_cutoff(),
            dim_cap: default_cap(),
            tau_max_ns: None,
            tau_points: default_points(),
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let field = if path == "." { "<root>".to_string() } else { path };
            Error::param(field, format!("{inner}"))
        })?;
        if file.version != SCHEMA_VERSION {
            return Err(Error::param(
                "version",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", file.version),
            ));
        }
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Internal (rad/s, rad, s) configuration, validated.
    pub fn to_system(&self) -> Result<SystemConfig> {
        let emitters = self
            .emitters
            .iter()
            .map(|e| EmitterParams {
                delta: e.delta * MHZ,
                g: e.g * MHZ,
                phi: e.phi * PI,
                gamma: e.gamma * MHZ,
                gamma_deph: e.gamma_deph * MHZ,
                gamma_ex: e.gamma_ex * MHZ,
                gamma_e: e.gamma_e * MHZ,
                gamma_s: e.gamma_s * MHZ,
            })
            .collect();
        let c = &self.cavity;
        let cavity = CavityParams {
            kappa_i: c.kappa_i * MHZ,
            kappa_c: c.kappa_c * MHZ,
            g_bs: c.g_bs * MHZ,
            detuning_cav: c.detuning * MHZ,
        };
        let kerr = self.kerr.as_ref().map(KerrEntry::to_params).transpose()?;
        let config = SystemConfig {
            emitters,
            cavity,
            kerr,
            fock_cutoff: self.numerics.fock_cutoff,
            dim_cap: self.numerics.dim_cap,
        };
        config.validate()?;
        Ok(config)
    }

    /// File representation of an internal configuration (inverse of
    /// [`ConfigFile::to_system`] up to rounding). Kerr pumps are written as
    /// explicit samples.
    pub fn from_system(config: &SystemConfig, numerics: Numerics) -> Self {
        let emitters = config
            .emitters
            .iter()
            .map(|e| EmitterEntry {
                delta: e.delta / MHZ,
                g: e.g / MHZ,
                phi: e.phi / PI,
                gamma: e.gamma / MHZ,
                gamma_deph: e.gamma_deph / MHZ,
                gamma_ex: e.gamma_ex / MHZ,
                gamma_e: e.gamma_e / MHZ,
                gamma_s: e.gamma_s / MHZ,
            })
            .collect();
        let c = &config.cavity;
        let kerr = config.kerr.as_ref().map(|k| {
            let p = &k.pump;
            let unit = amplitude_unit(p.shape);
            KerrEntry {
                g_kerr: k.g_kerr / MHZ,
                omega_idler: k.omega_idler / MHZ,
                pump: PumpEntry {
                    shape: p.shape,
                    kappa: p.pump_kappa / MHZ,
                    kappa_c: p.pump_kappa_c / MHZ,
                    detuning: p.pump_detuning / MHZ,
                    rep_period_ns: p.rep_period / NS,
                    dt_ns: p.dt / NS,
                    t0_ns: p.t0 / NS,
                    gaussian: None,
                    samples: Some(p.samples.iter().map(|s| [s.re / unit, s.im / unit]).collect()),
                },
            }
        });
        Self {
            version: SCHEMA_VERSION,
            emitters,
            cavity: CavityEntry {
                kappa_i: c.kappa_i / MHZ,
                kappa_c: c.kappa_c / MHZ,
                g_bs: c.g_bs / MHZ,
                detuning: c.detuning_cav / MHZ,
            },
            kerr,
            numerics: Numerics {
                fock_cutoff: config.fock_cutoff,
                dim_cap: config.dim_cap,
                ..numerics
            },
        }
    }
}

/// Internal amplitude per file amplitude unit.
fn amplitude_unit(shape: PumpShape) -> f64 {
    match shape {
        PumpShape::Input => (1.0 / NS).sqrt(),
        PumpShape::Intracavity => 1.0,
    }
}

impl KerrEntry {
    fn to_params(&self) -> Result<KerrParams> {
        let p = &self.pump;
        let unit = amplitude_unit(p.shape);
        let mut pulse = match (&p.gaussian, &p.samples) {
            (Some(gp), None) => {
                if !(gp.fwhm_ns > 0.0 && gp.t_end_ns > 0.0) {
                    return Err(Error::param("kerr.pump.gaussian", "fwhm_ns and t_end_ns must be positive"));
                }
                if !(p.dt_ns > 0.0) {
                    return Err(Error::param("kerr.pump.dt_ns", "must be positive"));
                }
                PumpPulse::gaussian_input(
                    gp.peak * unit,
                    gp.fwhm_ns * NS,
                    gp.center_ns * NS,
                    gp.t_end_ns * NS,
                    p.dt_ns * NS,
                    p.rep_period_ns * NS,
                    p.kappa * MHZ,
                    p.kappa_c * MHZ,
                )
            }
            (None, Some(samples)) => PumpPulse {
                shape: p.shape,
                t0: 0.0,
                dt: p.dt_ns * NS,
                samples: samples.iter().map(|s| C64::new(s[0], s[1]) * unit).collect(),
                rep_period: p.rep_period_ns * NS,
                pump_detuning: 0.0,
                pump_kappa: p.kappa * MHZ,
                pump_kappa_c: p.kappa_c * MHZ,
            },
            _ => return Err(Error::param("kerr.pump", "give exactly one of `gaussian` or `samples`")),
        };
        pulse.shape = p.shape;
        pulse.t0 = p.t0_ns * NS;
        pulse.pump_detuning = p.detuning * MHZ;
        Ok(KerrParams {
            g_kerr: self.g_kerr * MHZ,
            omega_idler: self.omega_idler * MHZ,
            pump: pulse,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub emitters: usize,
    pub levels: Vec<usize>,
    pub modes: Vec<String>,
    pub dimension: usize,
    pub dim_cap: usize,
    /// Stability of the quadratic (bosonic) analogue, when it exists.
    pub hurwitz: Option<bool>,
    pub warnings: Vec<String>,
}

/// Schema and invariant checks plus a Hilbert-space dimension estimate;
/// errors if the dimension exceeds the cap.
pub fn validate_file(file: &ConfigFile) -> Result<ValidationReport> {
    let config = file.to_system()?;
    let dimension = config.dimension();
    if dimension > config.dim_cap {
        return Err(Error::Capacity {
            dim: dimension,
            cap: config.dim_cap,
        });
    }
    let mut warnings = Vec::new();
    let hurwitz = if config.n() > 0 && config.levels().iter().all(|&l| l == 2) {
        let m = QuadraticModel::from_config(&config)?;
        let h = m.is_hurwitz()?;
        if !h {
            warnings.push("quadratic analogue is unstable (pump exceeds loss)".into());
        }
        Some(h)
    } else {
        None
    };
    if config.emitters.iter().any(|e| e.gamma_ex == 0.0) {
        warnings.push("emitters without incoherent pump: steady state is the vacuum".into());
    }
    if file.numerics.tau_points < 2 {
        return Err(Error::param("numerics.tau_points", "must be at least 2"));
    }
    if let Some(t) = file.numerics.tau_max_ns {
        if !(t > 0.0) {
            return Err(Error::param("numerics.tau_max_ns", "must be positive"));
        }
    }
    Ok(ValidationReport {
        emitters: config.n(),
        levels: config.levels(),
        modes: config.default_modes().iter().map(|m| m.label().to_string()).collect(),
        dimension,
        dim_cap: config.dim_cap,
        hurwitz,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four() -> String {
        let e = |phi: f64| format!(r#"{{"g": 150, "phi": {phi}, "gamma": 15, "gamma_deph": 40, "gamma_ex": 4.5}}"#);
        format!(
            r#"{{"version": 1, "emitters": [{}, {}, {}, {}], "cavity": {{"kappa_c": 300}}, "numerics": {{"fock_cutoff": 2}}}}"#,
            e(0.0),
            e(0.1),
            e(0.2),
            e(0.3)
        )
    }

    #[test]
    fn four_emitters_validate_with_dimension_144() {
        let f = ConfigFile::parse(&four()).unwrap();
        let r = validate_file(&f).unwrap();
        assert_eq!(r.dimension, 144);
        assert_eq!(r.hurwitz, Some(true));
        let s = f.to_system().unwrap();
        assert!((s.emitters[1].phi - 0.1 * PI).abs() < 1e-15);
        assert!((s.cavity.kappa() - 300.0 * MHZ).abs() < 1e-3);
    }

    #[test]
    fn negative_rate_names_the_field() {
        let text = four().replace(r#""phi": 0.2, "gamma": 15"#, r#""phi": 0.2, "gamma": -1"#);
        let err = ConfigFile::parse(&text).unwrap().to_system().unwrap_err().to_string();
        assert!(err.contains("emitters[2].gamma"), "{err}");
    }

    #[test]
    fn schema_errors_carry_paths() {
        let bad = four().replace(r#""kappa_c": 300"#, r#""kappa_c": "fast""#);
        let err = ConfigFile::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("cavity.kappa_c"), "{err}");
        let typo = four().replace(r#""gamma_deph""#, r#""gamma_dephasing""#);
        let err = ConfigFile::parse(&typo).unwrap_err().to_string();
        assert!(err.contains("emitters[0]"), "{err}");
        let old = four().replace(r#""version": 1"#, r#""version": 7"#);
        assert!(ConfigFile::parse(&old).unwrap_err().to_string().contains("version"));
        let none = four().replace(r#""version": 1, "#, "");
        assert!(ConfigFile::parse(&none).is_err());
    }

    #[test]
    fn capacity_is_enforced() {
        let big = four().replace(r#""fock_cutoff": 2"#, r#""fock_cutoff": 3, "dim_cap": 200"#);
        let f = ConfigFile::parse(&big).unwrap();
        assert!(matches!(validate_file(&f), Err(Error::Capacity { dim: 256, cap: 200 })));
    }

    #[test]
    fn round_trip_through_system() {
        let f = ConfigFile::parse(&four()).unwrap();
        let back = ConfigFile::from_system(&f.to_system().unwrap(), f.numerics.clone());
        let again = ConfigFile::parse(&back.to_json()).unwrap();
        assert_eq!(again.to_system().unwrap(), f.to_system().unwrap());
    }
}
