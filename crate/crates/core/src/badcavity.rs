//! Adiabatic elimination of the cavity modes (bad-cavity limit).
//!
//! In the standing-mode basis the cavity field follows the emitters,
//! `a_k ≈ Σ_n c_nk σ_n` with `c_nk = g_nk / (Δ_n − ω_k + iκ/2)`, which leaves
//! an emitter-only master equation with coherent couplings `J` and
//! collective decay `Γ`.

use crate::correlation::CorrelationCurve;
use crate::dynamics::{steady_state, Engine};
use crate::error::{Error, Result};
use crate::linalg::{eigh, CsrMatrix};
use crate::model::{standing_couplings, CavityParams, EmitterParams, SystemConfig};
use crate::space::{HilbertSpace, Operator, EXCITED, GROUND, SHELF};
use crate::superop::Superoperator;
use faer::Mat;
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

#[derive(Clone, Debug)]
pub struct EffectiveModel {
    pub emitters: Vec<EmitterParams>,
    /// Cavity frame offset already subtracted from every `Δ_n`.
    pub detuning_cav: f64,
    pub kappa: f64,
    pub j: Mat<C64>,
    pub gamma: Mat<C64>,
    /// `c_nk`, `k = 1, 2` for the standing modes.
    pub alpha_coeffs: Vec<[C64; 2]>,
    /// Standing-mode couplings `g_nk`.
    pub g_coeffs: Vec<[C64; 2]>,
    /// `Γ_n = κ g_n² / (Δ_n² + κ²/4)`.
    pub purcell: Vec<f64>,
    /// Expansion bookkeeping only; physical rates are used as given.
    pub epsilon: f64,
    pub d: u8,
}

pub fn effective_couplings(config: &SystemConfig) -> Result<EffectiveModel> {
    config.validate()?;
    let kappa = config.cavity.kappa();
    let omega = [config.cavity.g_bs, -config.cavity.g_bs];
    let g = standing_couplings(config);
    let n = config.n();
    let deltas: Vec<f64> = config
        .emitters
        .iter()
        .map(|e| e.delta - config.cavity.detuning_cav)
        .collect();
    let c: Vec<[C64; 2]> = (0..n)
        .map(|i| {
            let f = |k: usize| g[i][k] / C64::new(deltas[i] - omega[k], kappa / 2.0);
            [f(0), f(1)]
        })
        .collect();
    let j = Mat::from_fn(n, n, |m, nn| {
        (0..2)
            .map(|k| (c[m][k].conj() * g[nn][k] + c[nn][k] * g[m][k].conj()) * 0.5)
            .sum()
    });
    let gamma = Mat::from_fn(n, n, |m, nn| (0..2).map(|k| c[m][k] * c[nn][k].conj() * kappa).sum());
    let purcell = config
        .emitters
        .iter()
        .zip(&deltas)
        .map(|(e, d)| kappa * e.g * e.g / (d * d + kappa * kappa / 4.0))
        .collect();
    Ok(EffectiveModel {
        emitters: config.emitters.clone(),
        detuning_cav: config.cavity.detuning_cav,
        kappa,
        j,
        gamma,
        alpha_coeffs: c,
        g_coeffs: g,
        purcell,
        epsilon: 1.0,
        d: 1,
    })
}

impl EffectiveModel {
    pub fn n(&self) -> usize {
        self.emitters.len()
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        let levels: Vec<usize> = self.emitters.iter().map(EmitterParams::levels).collect();
        HilbertSpace::new(&[], 1, &levels, usize::MAX)
    }

    /// Drops all inter-emitter couplings (off-diagonal `J` and `Γ`).
    pub fn without_cross_terms(&self) -> Self {
        let mut out = self.clone();
        let n = self.n();
        for m in 0..n {
            for k in 0..n {
                if m != k {
                    out.j[(m, k)] = C64::new(0.0, 0.0);
                    out.gamma[(m, k)] = C64::new(0.0, 0.0);
                }
            }
        }
        out
    }

    /// Eigen-decomposition of `Γ` with tiny negative eigenvalues clipped.
    pub fn gamma_spectrum(&self) -> Result<(Vec<f64>, Mat<C64>)> {
        let n = self.n();
        let herm = Mat::from_fn(n, n, |i, j| 0.5 * (self.gamma[(i, j)] + self.gamma[(j, i)].conj()));
        let (vals, vecs) = eigh(&herm).ok_or_else(|| Error::Solver("eigh(Γ) failed".into()))?;
        let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if let Some(&min) = vals.first() {
            if min < -1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::NotPsd(min));
            }
        }
        Ok((vals.into_iter().map(|v| v.max(0.0)).collect(), vecs))
    }

    /// Collective operators `(α_a, α_b)` with `α_a = (A₁ + A₂)/√2`,
    /// `α_b = (A₁ − A₂)/√2` and `A_k = Σ_n c_nk σ_n`.
    pub fn collective_jump_ops(&self, space: &HilbertSpace) -> (Operator, Operator) {
        let d = space.dim();
        let mut a1 = CsrMatrix::zeros(d, d);
        let mut a2 = CsrMatrix::zeros(d, d);
        for (n, c) in self.alpha_coeffs.iter().enumerate() {
            let s = space.sigma(n);
            a1 = a1.add(&s.scale(c[0]));
            a2 = a2.add(&s.scale(c[1]));
        }
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        (a1.add(&a2).scale(h), a1.sub(&a2).scale(h))
    }

    pub fn hamiltonian(&self, space: &HilbertSpace) -> Operator {
        let d = space.dim();
        let n = self.n();
        let sig: Vec<Operator> = (0..n).map(|k| space.sigma(k)).collect();
        let mut h = CsrMatrix::zeros(d, d);
        for (k, e) in self.emitters.iter().enumerate() {
            let delta = e.delta - self.detuning_cav;
            h = h.add(&space.projector(k, EXCITED).scale(C64::new(delta, 0.0)));
        }
        for m in 0..n {
            for k in 0..n {
                let jmk = self.j[(m, k)];
                if jmk.norm() > 0.0 {
                    h = h.add(&sig[m].adjoint().matmul(&sig[k]).scale(jmk));
                }
            }
        }
        h
    }

    /// Emitter-only Liouvillian with collective decay and intrinsic terms.
    pub fn liouvillian(&self) -> Result<(Superoperator, HilbertSpace)> {
        let space = self.space()?;
        let (vals, vecs) = self.gamma_spectrum()?;
        let n = self.n();
        let mut jumps = Vec::new();
        for (j, &lam) in vals.iter().enumerate() {
            if lam <= 0.0 {
                continue;
            }
            let mut op = CsrMatrix::zeros(space.dim(), space.dim());
            for m in 0..n {
                let v = vecs[(m, j)];
                if v.norm() > 0.0 {
                    op = op.add(&space.sigma(m).scale(v * lam.sqrt()));
                }
            }
            jumps.push(op);
        }
        for (k, e) in self.emitters.iter().enumerate() {
            let mut add = |rate: f64, op: Operator| {
                if rate > 0.0 {
                    jumps.push(op.scale(C64::new(rate.sqrt(), 0.0)));
                }
            };
            add(e.gamma, space.sigma(k));
            add(e.gamma_deph, space.projector(k, EXCITED));
            add(e.gamma_ex, space.transition(k, EXCITED, GROUND));
            if space.levels()[k] == 3 {
                add(e.gamma_e, space.transition(k, SHELF, EXCITED));
                add(e.gamma_s, space.transition(k, GROUND, SHELF));
            }
        }
        let l = Superoperator::lindblad(&self.hamiltonian(&space), &jumps, Some(space.charges()));
        Ok((l, space))
    }

    /// Regression engine with channels `a` and `b` (the collective operators).
    pub fn engine(&self) -> Result<Engine> {
        let (l, space) = self.liouvillian()?;
        let (aa, ab) = self.collective_jump_ops(&space);
        Ok(Engine::with_state(steady_state(&l)?, vec![("a".into(), aa), ("b".into(), ab)]))
    }

    /// `arg(J₁₂ J₂₃ J₃₁)`, invariant under emitter rephasing.
    pub fn loop_phase(&self, i: usize, j: usize, k: usize) -> f64 {
        (self.j[(i, j)] * self.j[(j, k)] * self.j[(k, i)]).arg()
    }
}

pub fn build_effective_liouvillian(model: &EffectiveModel) -> Result<Superoperator> {
    Ok(model.liouvillian()?.0)
}

pub fn g2_effective(model: &EffectiveModel, pair: (&str, &str), taus: &[f64]) -> Result<CorrelationCurve> {
    let mut c = model.engine()?.g2(pair.0, pair.1, taus)?;
    c.flags.push("bad-cavity effective model".into());
    Ok(c)
}

/// Closed forms valid at `g_bs = 0` in the gauge `θ_n = arg(Δ_n + iκ/2)`:
/// `Γ'_mn = √(Γ_m Γ_n) cos(φ_m − φ_n)`, `J'_mn = (Δ_m + Δ_n)/(2κ) Γ'_mn`.
pub fn closed_form_gauged(config: &SystemConfig) -> (Mat<f64>, Mat<f64>) {
    let kappa = config.cavity.kappa();
    let e = &config.emitters;
    let n = e.len();
    let d = |k: usize| e[k].delta - config.cavity.detuning_cav;
    let p = |k: usize| kappa * e[k].g * e[k].g / (d(k).powi(2) + kappa * kappa / 4.0);
    let gam = Mat::from_fn(n, n, |m, k| (p(m) * p(k)).sqrt() * (e[m].phi - e[k].phi).cos());
    let j = Mat::from_fn(n, n, |m, k| (d(m) + d(k)) / (2.0 * kappa) * gam[(m, k)]);
    (j, gam)
}

/// Gauge phases `θ_n = arg(Δ_n + iκ/2)` used by [`closed_form_gauged`].
pub fn closed_form_thetas(config: &SystemConfig) -> Vec<f64> {
    let kappa = config.cavity.kappa();
    config
        .emitters
        .iter()
        .map(|e| C64::new(e.delta - config.cavity.detuning_cav, kappa / 2.0).arg())
        .collect()
}

/// Two-emitter configuration used to study convergence of the elimination:
/// `Δ₁ = κ, Δ₂ = κ/2, φ₁ = π/4, φ₂ = 0, g_bs = κ/2, g_n = εκ` and
/// `γ = γ' = γ^ex = ε^d κ`.
pub fn comparison_config(kappa: f64, epsilon: f64, d: u8, fock_cutoff: usize) -> SystemConfig {
    let r = epsilon.powi(d as i32) * kappa;
    let g = epsilon * kappa;
    SystemConfig::new(
        vec![
            EmitterParams::two_level(kappa, g, PI / 4.0, r, r, r),
            EmitterParams::two_level(kappa / 2.0, g, 0.0, r, r, r),
        ],
        CavityParams::with_kappa(kappa, kappa / 2.0),
        fock_cutoff,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(phis: &[f64], deltas: &[f64], g_bs: f64) -> SystemConfig {
        SystemConfig::new(
            phis.iter()
                .zip(deltas)
                .map(|(&p, &d)| EmitterParams::two_level(d, 0.1, p, 0.01, 0.0, 0.0))
                .collect(),
            CavityParams::with_kappa(1.0, g_bs),
            1,
        )
    }

    #[test]
    fn resonant_purcell_rate() {
        let m = effective_couplings(&cfg(&[0.3], &[0.0], 0.0)).unwrap();
        assert!((m.gamma[(0, 0)].re - 4.0 * 0.01).abs() < 1e-15);
        assert!((m.purcell[0] - 0.04).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_phases_decouple() {
        let m = effective_couplings(&cfg(&[0.2, 0.2 + PI / 2.0], &[0.3, 0.3], 0.0)).unwrap();
        assert!(m.gamma[(0, 1)].norm() < 1e-16);
    }

    #[test]
    fn j_and_gamma_hermitian() {
        let m = effective_couplings(&cfg(&[0.2, 1.0, 2.5], &[0.3, -0.1, 0.7], 0.4)).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert!((m.j[(a, b)] - m.j[(b, a)].conj()).norm() < 1e-15);
                assert!((m.gamma[(a, b)] - m.gamma[(b, a)].conj()).norm() < 1e-15);
            }
        }
        let (vals, _) = m.gamma_spectrum().unwrap();
        assert!(vals[0].abs() < 1e-12, "rank must be at most two");
    }

    #[test]
    fn zero_phase_couples_equally() {
        let m = effective_couplings(&cfg(&[0.0, 0.0], &[0.0, 0.2], 0.0)).unwrap();
        let space = m.space().unwrap();
        let (aa, ab) = m.collective_jump_ops(&space);
        assert!(aa.nnz() > 0);
        assert!(aa.sub(&ab).max_abs() < 1e-16);
    }

    #[test]
    fn non_psd_gamma_is_rejected() {
        let mut m = effective_couplings(&cfg(&[0.0], &[0.0], 0.0)).unwrap();
        m.gamma[(0, 0)] = C64::new(-1.0, 0.0);
        assert!(matches!(m.gamma_spectrum(), Err(Error::NotPsd(_))));
    }
}
