//! Closed-form correlations of independent (uncorrelated) emitters.
//!
//! Each emitter contributes with an intensity weight `I_n`; channel `a`
//! sees it with phase `e^{-iφ_n}` and channel `b` with `e^{iφ_n}`, so the
//! cross-correlation carries the relative phases `φ_nm = 2(φ_n − φ_m)`.

use crate::badcavity::EffectiveModel;
use crate::dynamics::{steady_state, Engine};
use crate::error::{Error, Result};
use crate::model::EmitterParams;
use crate::space::{HilbertSpace, EXCITED, GROUND, SHELF};
use crate::superop::Superoperator;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pair {
    AA,
    AB,
    BA,
    BB,
}

impl Pair {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "aa" => Some(Pair::AA),
            "ab" => Some(Pair::AB),
            "ba" => Some(Pair::BA),
            "bb" => Some(Pair::BB),
            _ => None,
        }
    }

    /// Sign applied to `φ_nm`; zero for auto-correlations.
    fn phase_sign(self) -> f64 {
        match self {
            Pair::AA | Pair::BB => 0.0,
            Pair::AB => 1.0,
            Pair::BA => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndepEmitter {
    pub intensity: f64,
    pub delta: f64,
    pub phi: f64,
    /// Total population decay (intrinsic plus cavity-enhanced).
    pub gamma: f64,
    pub gamma_deph: f64,
    pub gamma_ex: f64,
    #[serde(default)]
    pub gamma_e: f64,
    #[serde(default)]
    pub gamma_s: f64,
    /// Mean and standard deviation of the diffusing detuning.
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub s: f64,
}

impl IndepEmitter {
    fn three_level(&self) -> bool {
        self.gamma_e > 0.0
    }

    /// Decay rate of the optical coherence `⟨σ^†(τ) σ⟩`.
    fn coherence_rate(&self) -> f64 {
        0.5 * (self.gamma + self.gamma_e + self.gamma_ex + self.gamma_deph)
    }

    /// `g²_n(τ) − 1` of the single emitter (population dynamics only).
    pub fn self_term(&self, tau: f64) -> (f64, bool) {
        let t = tau.abs();
        if !self.three_level() {
            return (-(-(self.gamma + self.gamma_ex) * t).exp(), false);
        }
        let s = shelving(self.gamma, self.gamma_ex, self.gamma_e, self.gamma_s);
        (-s.envelope(t), s.oscillatory)
    }
}

/// `x, y, z, λ` of the three-level population dynamics.
#[derive(Clone, Copy, Debug)]
pub struct Shelving {
    pub x: f64,
    pub y: f64,
    /// `x² − y`; negative values mean `z` is imaginary.
    pub z2: f64,
    /// `λ z = x − γ^s + γ^e γ^ex / γ^s`.
    pub lambda_z: f64,
    pub oscillatory: bool,
}

pub fn shelving(gamma: f64, gamma_ex: f64, gamma_e: f64, gamma_s: f64) -> Shelving {
    let x = 0.5 * (gamma + gamma_e + gamma_s + gamma_ex);
    let y = (gamma + gamma_e) * gamma_s + (gamma_s + gamma_e) * gamma_ex;
    let z2 = x * x - y;
    Shelving {
        x,
        y,
        z2,
        lambda_z: x - gamma_s + gamma_e * gamma_ex / gamma_s,
        oscillatory: z2 < 0.0,
    }
}

impl Shelving {
    /// `e^{−x t}(cosh z t − λ sinh z t)`, continued to `cos`/`sin` when `z`
    /// is imaginary.
    pub fn envelope(&self, t: f64) -> f64 {
        let (c, s_over_z) = if self.z2 > 0.0 {
            let z = self.z2.sqrt();
            if z * t < 1e-8 {
                (1.0, t)
            } else {
                ((z * t).cosh(), (z * t).sinh() / z)
            }
        } else if self.z2 < 0.0 {
            let w = (-self.z2).sqrt();
            if w * t < 1e-8 {
                (1.0, t)
            } else {
                ((w * t).cos(), (w * t).sin() / w)
            }
        } else {
            (1.0, t)
        };
        (-self.x * t).exp() * (c - self.lambda_z * s_over_z)
    }

    pub fn lambda(&self) -> Option<f64> {
        (self.z2 > 0.0).then(|| self.lambda_z / self.z2.sqrt())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndepEnsemble {
    pub emitters: Vec<IndepEmitter>,
}

impl IndepEnsemble {
    /// Weights `I_n = γ^ex Γ_n / (γ + γ^ex)` (two-level) or
    /// `γ^ex γ^s Γ_n / y_n` (three-level) from Purcell rates `Γ_n`; the total
    /// population decay is `γ_n + Γ_n`.
    pub fn from_rates(emitters: &[EmitterParams], purcell: &[f64]) -> Self {
        let emitters = emitters
            .iter()
            .zip(purcell)
            .map(|(e, &p)| {
                let gamma = e.gamma + p;
                let intensity = if e.gamma_e > 0.0 {
                    let s = shelving(gamma, e.gamma_ex, e.gamma_e, e.gamma_s);
                    e.gamma_ex * e.gamma_s * p / s.y
                } else {
                    e.gamma_ex * p / (gamma + e.gamma_ex)
                };
                IndepEmitter {
                    intensity,
                    delta: e.delta,
                    phi: e.phi,
                    gamma,
                    gamma_deph: e.gamma_deph,
                    gamma_ex: e.gamma_ex,
                    gamma_e: e.gamma_e,
                    gamma_s: e.gamma_s,
                    mu: e.delta,
                    s: 0.0,
                }
            })
            .collect();
        Self { emitters }
    }

    /// Independent-emitter limit of a bad-cavity model: decay `γ + Γ_nn`,
    /// detuning shifted by `J_nn`.
    pub fn from_effective(model: &EffectiveModel) -> Self {
        let purcell: Vec<f64> = (0..model.n()).map(|k| model.gamma[(k, k)].re).collect();
        let mut out = Self::from_rates(&model.emitters, &purcell);
        for (k, e) in out.emitters.iter_mut().enumerate() {
            e.delta = e.delta - model.detuning_cav + model.j[(k, k)].re;
            e.mu = e.delta;
        }
        out
    }

    /// `N` identical emitters with unit weights and the given phases.
    pub fn identical(template: &IndepEmitter, phis: &[f64]) -> Self {
        Self {
            emitters: phis
                .iter()
                .map(|&phi| IndepEmitter {
                    phi,
                    ..template.clone()
                })
                .collect(),
        }
    }

    fn weights(&self) -> Result<Vec<f64>> {
        let total: f64 = self.emitters.iter().map(|e| e.intensity).sum();
        if !(total > 0.0) || self.emitters.iter().any(|e| e.intensity < 0.0) {
            return Err(Error::Domain("intensity weights must be non-negative with positive sum".into()));
        }
        Ok(self.emitters.iter().map(|e| e.intensity / total).collect())
    }
}

/// `ξ_φ = Σ_nm r_n r_m cos(2(φ_n − φ_m))`.
pub fn xi_phi(ensemble: &IndepEnsemble) -> Result<f64> {
    let r = ensemble.weights()?;
    let e = &ensemble.emitters;
    let mut xi = 0.0;
    for n in 0..e.len() {
        for m in 0..e.len() {
            xi += r[n] * r[m] * (2.0 * (e[n].phi - e[m].phi)).cos();
        }
    }
    Ok(xi)
}

/// `ξ_φ` for uniform weights.
pub fn xi_uniform(phis: &[f64]) -> f64 {
    let s: C64 = phis.iter().map(|&p| C64::from_polar(1.0, 2.0 * p)).sum();
    s.norm_sqr() / (phis.len() as f64).powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticValue {
    pub value: f64,
    /// The three-level `z` was imaginary and the trigonometric continuation
    /// was used for at least one emitter.
    pub oscillatory: bool,
}

fn g2_general(ensemble: &IndepEnsemble, pair: Pair, tau: f64, diffusion: bool) -> Result<AnalyticValue> {
    let r = ensemble.weights()?;
    let e = &ensemble.emitters;
    let sign = pair.phase_sign();
    let t = tau.abs();
    let mut value = 1.0;
    let mut oscillatory = false;
    for n in 0..e.len() {
        let (s, osc) = e[n].self_term(tau);
        oscillatory |= osc;
        value += r[n] * r[n] * s;
    }
    for n in 0..e.len() {
        for m in 0..e.len() {
            if n == m {
                continue;
            }
            let rate = e[n].coherence_rate() + e[m].coherence_rate();
            let phi_nm = sign * 2.0 * (e[n].phi - e[m].phi);
            let (freq, gauss) = if diffusion {
                let s2 = e[n].s.powi(2) + e[m].s.powi(2);
                (e[n].mu - e[m].mu, (-0.5 * s2 * tau * tau).exp())
            } else {
                (e[n].delta - e[m].delta, 1.0)
            };
            value += r[n] * r[m] * (-rate * t).exp() * gauss * (freq * tau - phi_nm).cos();
        }
    }
    Ok(AnalyticValue { value, oscillatory })
}

/// Two-level independent-emitter `g²` (requires `γ^e = 0` for all emitters).
pub fn g2_indep_2level(ensemble: &IndepEnsemble, pair: Pair, tau: f64) -> Result<f64> {
    if ensemble.emitters.iter().any(|e| e.three_level()) {
        return Err(Error::Domain("two-level formula used with γ^e > 0".into()));
    }
    Ok(g2_general(ensemble, pair, tau, false)?.value)
}

/// Three-level independent-emitter `g²` (metastable shelving).
pub fn g2_indep_3level(ensemble: &IndepEnsemble, pair: Pair, tau: f64) -> Result<AnalyticValue> {
    if ensemble.emitters.iter().any(|e| e.three_level() && !(e.gamma_s > 0.0)) {
        return Err(Error::Domain("three-level formula requires γ^s > 0".into()));
    }
    g2_general(ensemble, pair, tau, false)
}

/// Diffusion-averaged `g²`: Gaussian detunings with means `μ_n` and standard
/// deviations `s_n` (the dependence of `I_n` on the detuning is neglected).
pub fn g2_diffused(ensemble: &IndepEnsemble, pair: Pair, tau: f64) -> Result<AnalyticValue> {
    g2_general(ensemble, pair, tau, true)
}

/// Monte-Carlo version of [`g2_diffused`]: mean and standard error over
/// `samples` detuning draws.
pub fn g2_diffused_mc<R: Rng>(
    ensemble: &IndepEnsemble,
    pair: Pair,
    tau: f64,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let dists: Vec<Normal<f64>> = ensemble
        .emitters
        .iter()
        .map(|e| Normal::new(e.mu, e.s).map_err(|e| Error::Domain(e.to_string())))
        .collect::<Result<_>>()?;
    let mut draw = ensemble.clone();
    let mut acc = Vec::with_capacity(samples);
    for _ in 0..samples {
        for (e, d) in draw.emitters.iter_mut().zip(&dists) {
            e.delta = d.sample(rng);
        }
        acc.push(g2_general(&draw, pair, tau, false)?.value);
    }
    Ok(mean_sem(&acc))
}

/// Purcell-weighted Monte-Carlo average (not part of the closed-form model):
/// each draw recomputes `Γ_n(Δ_n) = κ g_n² / (Δ_n² + κ²/4)`, the weights and
/// the total decay before averaging.
#[allow(clippy::too_many_arguments)]
pub fn g2_diffused_purcell_mc<R: Rng>(
    emitters: &[EmitterParams],
    s: &[f64],
    kappa: f64,
    pair: Pair,
    tau: f64,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let mut acc = Vec::with_capacity(samples);
    let mut drawn = emitters.to_vec();
    for _ in 0..samples {
        for ((d, e), &sn) in drawn.iter_mut().zip(emitters).zip(s) {
            d.delta = e.delta + sn * rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let purcell: Vec<f64> = drawn
            .iter()
            .map(|e| kappa * e.g * e.g / (e.delta * e.delta + kappa * kappa / 4.0))
            .collect();
        let ens = IndepEnsemble::from_rates(&drawn, &purcell);
        acc.push(g2_general(&ens, pair, tau, false)?.value);
    }
    Ok(mean_sem(&acc))
}

fn mean_sem(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Parameters of the identical-emitter fit expression. `n` may be
/// non-integer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitForm {
    pub n: f64,
    pub xi: f64,
    pub gamma: f64,
    pub gamma_deph: f64,
    pub gamma_ex: f64,
    pub gamma_e: f64,
    pub gamma_s: f64,
    /// Width of the Gaussian factor `e^{−s²τ²/2}`.
    pub s: f64,
}

/// `g²(τ) ≈ 1 − (1/N) e^{−x|τ|}(cosh z|τ| − λ sinh z|τ|)
///        + (ξ − 1/N) e^{−(γ+γ^e+γ^ex+γ')|τ|} e^{−s²τ²/2}`;
/// auto-correlations use `ξ = 1`.
pub fn g2_fit_form(p: &FitForm, cross: bool, tau: f64) -> f64 {
    let t = tau.abs();
    let self_env = if p.gamma_e > 0.0 {
        shelving(p.gamma, p.gamma_ex, p.gamma_e, p.gamma_s).envelope(t)
    } else {
        (-(p.gamma + p.gamma_ex) * t).exp()
    };
    let xi = if cross { p.xi } else { 1.0 };
    let coh = (-(p.gamma + p.gamma_e + p.gamma_ex + p.gamma_deph) * t).exp() * (-0.5 * p.s * p.s * tau * tau).exp();
    1.0 - self_env / p.n + (xi - 1.0 / p.n) * coh
}

/// Emitter-only regression engine for one emitter, channel `s` = `σ`.
pub fn single_emitter_engine(e: &EmitterParams) -> Result<Engine> {
    let space = HilbertSpace::new(&[], 1, &[e.levels()], usize::MAX)?;
    let mut jumps = Vec::new();
    let mut add = |rate: f64, op| {
        if rate > 0.0 {
            jumps.push(crate::linalg::CsrMatrix::scale(&op, C64::new(rate.sqrt(), 0.0)));
        }
    };
    add(e.gamma, space.sigma(0));
    add(e.gamma_deph, space.projector(0, EXCITED));
    add(e.gamma_ex, space.transition(0, EXCITED, GROUND));
    if e.levels() == 3 {
        add(e.gamma_e, space.transition(0, SHELF, EXCITED));
        add(e.gamma_s, space.transition(0, GROUND, SHELF));
    }
    let h = space.projector(0, EXCITED).scale(C64::new(e.delta, 0.0));
    let l = Superoperator::lindblad(&h, &jumps, Some(space.charges()));
    Ok(Engine::with_state(steady_state(&l)?, vec![("s".into(), space.sigma(0))]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tmpl() -> IndepEmitter {
        IndepEmitter {
            intensity: 1.0,
            delta: 0.0,
            phi: 0.0,
            gamma: 1.0,
            gamma_deph: 0.5,
            gamma_ex: 0.2,
            gamma_e: 0.0,
            gamma_s: 0.0,
            mu: 0.0,
            s: 0.0,
        }
    }

    #[test]
    fn single_emitter_antibunching() {
        let ens = IndepEnsemble::identical(&tmpl(), &[0.3]);
        assert!(g2_indep_2level(&ens, Pair::AA, 0.0).unwrap().abs() < 1e-15);
        let v = g2_indep_2level(&ens, Pair::AB, 0.7).unwrap();
        assert!((v - (1.0 - (-1.2f64 * 0.7).exp())).abs() < 1e-15);
    }

    #[test]
    fn xi_values() {
        assert!((xi_uniform(&[0.4; 3]) - 1.0).abs() < 1e-15);
        let q = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];
        assert!(xi_uniform(&q).abs() < 1e-15);
        let ens = IndepEnsemble::identical(&tmpl(), &q);
        assert!(xi_phi(&ens).unwrap().abs() < 1e-15);
    }

    #[test]
    fn zero_delay_identities() {
        let mut ens = IndepEnsemble::identical(&tmpl(), &[0.1, 0.9, 2.0]);
        ens.emitters[1].intensity = 0.3;
        ens.emitters[2].delta = 0.7;
        let r: Vec<f64> = {
            let t: f64 = ens.emitters.iter().map(|e| e.intensity).sum();
            ens.emitters.iter().map(|e| e.intensity / t).collect()
        };
        let aa = g2_indep_2level(&ens, Pair::AA, 0.0).unwrap();
        assert!((aa - (2.0 - 2.0 * r.iter().map(|x| x * x).sum::<f64>())).abs() < 1e-14);
        let ab = g2_indep_2level(&ens, Pair::AB, 0.0).unwrap();
        assert!((ab - (aa + xi_phi(&ens).unwrap() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn fit_form_at_measured_parameters() {
        let p = FitForm {
            n: 17.4,
            xi: 0.07,
            gamma: 1.0,
            gamma_deph: 1.0,
            gamma_ex: 0.1,
            gamma_e: 0.1,
            gamma_s: 0.05,
            s: 0.0,
        };
        assert!((g2_fit_form(&p, false, 0.0) - 2.0 * (1.0 - 1.0 / 17.4)).abs() < 1e-14);
        assert!((g2_fit_form(&p, true, 0.0) - (1.0 + 0.07 - 2.0 / 17.4)).abs() < 1e-14);
    }

    #[test]
    fn imaginary_z_is_flagged_and_continuous() {
        // large pump and slow shelf give x² < y
        let s = shelving(1.0, 3.0, 1.0, 2.0);
        assert!(s.oscillatory);
        let a = s.envelope(1e-9);
        assert!((a - 1.0).abs() < 1e-6);
        let mut e = tmpl();
        e.gamma_ex = 3.0;
        e.gamma_e = 1.0;
        e.gamma_s = 2.0;
        let ens = IndepEnsemble::identical(&e, &[0.0]);
        assert!(g2_indep_3level(&ens, Pair::AA, 0.5).unwrap().oscillatory);
    }

    #[test]
    fn bad_weights_rejected() {
        let mut ens = IndepEnsemble::identical(&tmpl(), &[0.0]);
        ens.emitters[0].intensity = 0.0;
        assert!(xi_phi(&ens).is_err());
    }
}
