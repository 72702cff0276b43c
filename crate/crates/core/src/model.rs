//! Physical parameters and construction of the full cavity–emitter model.
//!
//! All rates and frequencies are angular (rad/s) and phases are in radians.
//! The Hamiltonian is written in the frame rotating at the cavity frequency.

use crate::error::{Error, Result};
use crate::kerr::PumpPulse;
use crate::linalg::CsrMatrix;
use crate::space::{HilbertSpace, Mode, Operator, DEFAULT_DIM_CAP, EXCITED, GROUND, SHELF};
use crate::superop::Superoperator;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams {
    /// Detuning from the cavity, `ω_e - ω_cav`.
    pub delta: f64,
    pub g: f64,
    pub phi: f64,
    pub gamma: f64,
    pub gamma_deph: f64,
    pub gamma_ex: f64,
    #[serde(default)]
    pub gamma_e: f64,
    #[serde(default)]
    pub gamma_s: f64,
}

impl EmitterParams {
    pub fn two_level(delta: f64, g: f64, phi: f64, gamma: f64, gamma_deph: f64, gamma_ex: f64) -> Self {
        Self {
            delta,
            g,
            phi,
            gamma,
            gamma_deph,
            gamma_ex,
            gamma_e: 0.0,
            gamma_s: 0.0,
        }
    }

    pub fn levels(&self) -> usize {
        if self.gamma_e > 0.0 {
            3
        } else {
            2
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        let fields = [
            ("delta", self.delta),
            ("g", self.g),
            ("phi", self.phi),
            ("gamma", self.gamma),
            ("gamma_deph", self.gamma_deph),
            ("gamma_ex", self.gamma_ex),
            ("gamma_e", self.gamma_e),
            ("gamma_s", self.gamma_s),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::param(format!("{path}.{name}"), "must be finite"));
            }
            if name != "delta" && name != "phi" && v < 0.0 {
                return Err(Error::param(format!("{path}.{name}"), "must be non-negative"));
            }
        }
        if self.gamma_e > 0.0 && self.gamma_s <= 0.0 {
            return Err(Error::param(
                format!("{path}.gamma_s"),
                "must be positive when gamma_e > 0",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub kappa_i: f64,
    pub kappa_c: f64,
    pub g_bs: f64,
    #[serde(default)]
    pub detuning_cav: f64,
}

impl CavityParams {
    /// Total loaded linewidth.
    pub fn kappa(&self) -> f64 {
        self.kappa_i + self.kappa_c
    }

    pub fn with_kappa(kappa: f64, g_bs: f64) -> Self {
        Self {
            kappa_i: 0.0,
            kappa_c: kappa,
            g_bs,
            detuning_cav: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KerrParams {
    pub g_kerr: f64,
    pub omega_idler: f64,
    pub pump: PumpPulse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub emitters: Vec<EmitterParams>,
    pub cavity: CavityParams,
    #[serde(default)]
    pub kerr: Option<KerrParams>,
    pub fock_cutoff: usize,
    #[serde(default = "default_cap")]
    pub dim_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_DIM_CAP
}

impl SystemConfig {
    pub fn new(emitters: Vec<EmitterParams>, cavity: CavityParams, fock_cutoff: usize) -> Self {
        Self {
            emitters,
            cavity,
            kerr: None,
            fock_cutoff,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }

    pub fn n(&self) -> usize {
        self.emitters.len()
    }

    pub fn levels(&self) -> Vec<usize> {
        self.emitters.iter().map(EmitterParams::levels).collect()
    }

    /// Modes used when none are requested explicitly.
    pub fn default_modes(&self) -> Vec<Mode> {
        let mut m = vec![Mode::A, Mode::B];
        if self.kerr.is_some() {
            m.push(Mode::Idler);
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        if self.emitters.is_empty() && self.kerr.is_none() {
            return Err(Error::param("emitters", "at least one emitter is required"));
        }
        for (i, e) in self.emitters.iter().enumerate() {
            e.validate(&format!("emitters[{i}]"))?;
        }
        let c = &self.cavity;
        for (name, v) in [("kappa_i", c.kappa_i), ("kappa_c", c.kappa_c), ("g_bs", c.g_bs)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(format!("cavity.{name}"), "must be finite and non-negative"));
            }
        }
        if !c.detuning_cav.is_finite() {
            return Err(Error::param("cavity.detuning_cav", "must be finite"));
        }
        if c.kappa() <= 0.0 {
            return Err(Error::param("cavity.kappa_c", "total kappa must be positive"));
        }
        if self.fock_cutoff < 1 {
            return Err(Error::param("fock_cutoff", "must be >= 1"));
        }
        if let Some(k) = &self.kerr {
            if !k.g_kerr.is_finite() || !k.omega_idler.is_finite() {
                return Err(Error::param("kerr.g_kerr", "must be finite"));
            }
            k.pump.validate()?;
        }
        Ok(())
    }

    /// Hilbert-space dimension for the default mode set.
    pub fn dimension(&self) -> usize {
        let modes = self.default_modes().len() as u32;
        let mut d = (self.fock_cutoff + 1).saturating_pow(modes);
        for l in self.levels() {
            d = d.saturating_mul(l);
        }
        d
    }
}

pub fn build_space(config: &SystemConfig, modes: &[Mode]) -> Result<HilbertSpace> {
    config.validate()?;
    HilbertSpace::new(modes, config.fock_cutoff, &config.levels(), config.dim_cap)
}

/// A validated configuration together with its Hilbert space.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: SystemConfig,
    pub space: HilbertSpace,
}

impl Model {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        Self::with_modes(config, &config.default_modes())
    }

    pub fn with_modes(config: &SystemConfig, modes: &[Mode]) -> Result<Self> {
        let space = build_space(config, modes)?;
        Ok(Self {
            config: config.clone(),
            space,
        })
    }

    pub fn annihilation(&self, m: Mode) -> Result<Operator> {
        self.space.annihilation(m)
    }

    /// Static Hamiltonian (the parametric drive is added by the Kerr module).
    pub fn hamiltonian(&self) -> Operator {
        let s = &self.space;
        let d = s.dim();
        let cav = &self.config.cavity;
        let mut trips: Vec<(usize, usize, C64)> = Vec::new();
        let mut push = |op: &Operator, coef: C64| {
            for (r, c, v) in op.triplets() {
                trips.push((r, c, v * coef));
            }
        };
        let a = s.annihilation(Mode::A).ok();
        let b = s.annihilation(Mode::B).ok();
        if let (Some(a), Some(b)) = (&a, &b) {
            if cav.g_bs != 0.0 {
                let adb = a.adjoint().matmul(b);
                push(&adb, C64::new(cav.g_bs, 0.0));
                push(&adb.adjoint(), C64::new(cav.g_bs, 0.0));
            }
        }
        if let Some(k) = &self.config.kerr {
            if let Ok(n) = s.number(Mode::Idler) {
                push(&n, C64::new(k.omega_idler, 0.0));
            }
        }
        for (n, e) in self.config.emitters.iter().enumerate() {
            let delta = e.delta - cav.detuning_cav;
            if delta != 0.0 {
                push(&s.projector(n, EXCITED), C64::new(delta, 0.0));
            }
            let sd = s.sigma(n).adjoint();
            let amp = e.g * FRAC_1_SQRT_2;
            for (mode, phase) in [(&a, e.phi), (&b, -e.phi)] {
                if let Some(m) = mode {
                    let term = sd.matmul(m);
                    let coef = C64::from_polar(amp, phase);
                    push(&term, coef);
                    push(&term.adjoint(), coef.conj());
                }
            }
        }
        CsrMatrix::from_triplets(d, d, trips)
    }

    /// Collapse operators, each with a label.
    pub fn jump_operators(&self) -> Vec<(String, Operator)> {
        let s = &self.space;
        let kappa = self.config.cavity.kappa();
        let mut out = Vec::new();
        for &m in s.modes() {
            let a = s.annihilation(m).expect("mode present");
            out.push((format!("kappa_{}", m.label()), a.scale(C64::new(kappa.sqrt(), 0.0))));
        }
        for (n, e) in self.config.emitters.iter().enumerate() {
            let mut add = |name: &str, rate: f64, op: Operator| {
                if rate > 0.0 {
                    out.push((format!("{name}[{n}]"), op.scale(C64::new(rate.sqrt(), 0.0))));
                }
            };
            add("gamma", e.gamma, s.sigma(n));
            add("gamma_deph", e.gamma_deph, s.projector(n, EXCITED));
            add("gamma_ex", e.gamma_ex, s.transition(n, EXCITED, GROUND));
            if s.levels()[n] == 3 {
                add("gamma_e", e.gamma_e, s.transition(n, SHELF, EXCITED));
                add("gamma_s", e.gamma_s, s.transition(n, GROUND, SHELF));
            }
        }
        out
    }

    pub fn liouvillian(&self) -> Superoperator {
        let jumps: Vec<Operator> = self.jump_operators().into_iter().map(|(_, j)| j).collect();
        Superoperator::lindblad(&self.hamiltonian(), &jumps, Some(self.space.charges()))
    }
}

pub fn build_hamiltonian(config: &SystemConfig) -> Result<Operator> {
    Ok(Model::new(config)?.hamiltonian())
}

pub fn build_liouvillian(config: &SystemConfig) -> Result<Superoperator> {
    Ok(Model::new(config)?.liouvillian())
}

/// Absorbs `σ_n → e^{iθ_n} σ_n` into the coupling phases: `φ_n → φ_n + θ_n`.
///
/// Only a global shift (all `θ_n` equal) is a symmetry of the model, and then
/// only together with the mode rephasing `a → e^{iθ} a`, `b → e^{-iθ} b`,
/// which leaves the backscattering term invariant when `g_bs = 0` or
/// `2θ ≡ 0 (mod 2π)`. See [`is_pure_gauge`].
pub fn gauge_transform(config: &SystemConfig, thetas: &[f64]) -> Result<SystemConfig> {
    if thetas.len() != config.n() {
        return Err(Error::param(
            "thetas",
            format!("expected {} phases, got {}", config.n(), thetas.len()),
        ));
    }
    let mut out = config.clone();
    for (e, &t) in out.emitters.iter_mut().zip(thetas) {
        e.phi += t;
    }
    Ok(out)
}

/// Whether [`gauge_transform`] with these phases maps the model onto a
/// unitarily equivalent one (all correlation observables unchanged).
pub fn is_pure_gauge(config: &SystemConfig, thetas: &[f64]) -> bool {
    let Some(&t0) = thetas.first() else {
        return true;
    };
    let global = thetas.iter().all(|&t| (t - t0).abs() < 1e-12);
    if !global {
        return false;
    }
    let wrapped = (2.0 * t0).rem_euclid(2.0 * PI);
    config.cavity.g_bs == 0.0 || wrapped.min(2.0 * PI - wrapped) < 1e-12
}

/// Standing-wave modes `a₁ = (a+b)/√2` (frequency `+g_bs`) and
/// `a₂ = (a−b)/√2` (frequency `−g_bs`). `g[n][k]` is the coefficient of
/// `a_k^† σ_n` in the interaction.
#[derive(Clone, Debug)]
pub struct StandingModes {
    pub a1: Operator,
    pub a2: Operator,
    pub omega: [f64; 2],
    pub g: Vec<[C64; 2]>,
}

pub fn standing_couplings(config: &SystemConfig) -> Vec<[C64; 2]> {
    config
        .emitters
        .iter()
        .map(|e| [C64::new(e.g * e.phi.cos(), 0.0), C64::new(0.0, -e.g * e.phi.sin())])
        .collect()
}

pub fn standing_mode_transform(model: &Model) -> Result<StandingModes> {
    let a = model.annihilation(Mode::A)?;
    let b = model.annihilation(Mode::B)?;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    Ok(StandingModes {
        a1: a.add(&b).scale(h),
        a2: a.sub(&b).scale(h),
        omega: [model.config.cavity.g_bs, -model.config.cavity.g_bs],
        g: standing_couplings(&model.config),
    })
}

/// Convenience: identity on the model space.
pub fn identity(model: &Model) -> Operator {
    CsrMatrix::identity(model.space.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;

    fn one_emitter(phi: f64, g: f64, g_bs: f64) -> SystemConfig {
        SystemConfig::new(
            vec![EmitterParams::two_level(0.0, g, phi, 0.1, 0.0, 0.0)],
            CavityParams::with_kappa(1.0, g_bs),
            1,
        )
    }

    fn single_excitation_eigs(cfg: &SystemConfig) -> Vec<f64> {
        let m = Model::new(cfg).unwrap();
        let h = m.hamiltonian();
        let q = m.space.charges();
        let idx: Vec<usize> = (0..m.space.dim()).filter(|&i| q[i] == 1).collect();
        let (sub, leaked) = h.principal_submatrix(&idx);
        assert!(!leaked);
        eigh(&sub.to_dense()).unwrap().0
    }

    #[test]
    fn vacuum_rabi_splitting_is_phase_independent() {
        let e = single_excitation_eigs(&one_emitter(0.7, 2.0, 0.0));
        assert!((e[0] + 2.0).abs() < 1e-12);
        assert!(e[1].abs() < 1e-12);
        assert!((e[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn backscatter_hybridizes_modes() {
        let e = single_excitation_eigs(&one_emitter(0.0, 0.0, 0.5));
        assert!((e[0] + 0.5).abs() < 1e-12 && (e[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let mut cfg = one_emitter(0.3, 1.3, 0.4);
        cfg.emitters.push(EmitterParams::two_level(0.2, 0.7, 1.1, 0.1, 0.0, 0.0));
        let h = build_hamiltonian(&cfg).unwrap();
        assert!(h.hermiticity_defect() < 1e-12 * h.max_abs());
    }

    #[test]
    fn field_paths_in_validation_errors() {
        let mut cfg = one_emitter(0.0, 1.0, 0.0);
        cfg.emitters.push(cfg.emitters[0].clone());
        cfg.emitters.push(cfg.emitters[0].clone());
        cfg.emitters[2].gamma = -1.0;
        match cfg.validate() {
            Err(Error::InvalidParam { field, .. }) => assert_eq!(field, "emitters[2].gamma"),
            other => panic!("unexpected {other:?}"),
        }
        cfg.emitters[2].gamma = 1.0;
        cfg.emitters[2].gamma_e = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn standing_mode_couplings() {
        let cfg = one_emitter(0.0, 1.0, 0.0);
        assert_eq!(standing_couplings(&cfg)[0][1].norm(), 0.0);
        let cfg = one_emitter(PI / 2.0, 1.0, 0.0);
        assert!(standing_couplings(&cfg)[0][0].norm() < 1e-16);
        let g = 2.0 * PI * 150e6;
        let cfg = one_emitter(PI / 4.0, g, 0.0);
        let c = standing_couplings(&cfg)[0];
        assert!((c[0].norm() - g * FRAC_1_SQRT_2).abs() < 1e-6);
        assert!((c[1].norm() - g * FRAC_1_SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn gauge_checks() {
        let cfg = one_emitter(0.3, 1.0, 0.0);
        assert!(is_pure_gauge(&cfg, &[-0.3]));
        let cfg = one_emitter(PI / 4.0, 1.0, 0.5);
        assert!(!is_pure_gauge(&cfg, &[-PI / 4.0]));
        assert!(is_pure_gauge(&cfg, &[PI]));
        assert!(gauge_transform(&cfg, &[0.1, 0.2]).is_err());
    }
}
