//! Gaussian (quadratic) analogue of the emitter model: every emitter is
//! replaced by a bosonic mode `d_n` with linear pump and decay.
//!
//! Mode ordering is `(a, b, d_1, …, d_N)`. With `H = x†Mx + ½(x†Sx† + h.c.)`
//! and linear loss/gain, first moments obey `ẋ = A x + B x†`,
//! `A = −iM − (loss − gain)/2`, `B = −iS`, and the second moments
//! `N_ij = ⟨x_i† x_j⟩`, `X_ij = ⟨x_i x_j⟩` satisfy a closed linear system.

use crate::correlation::{chirality_metric, max_deviation, symmetric_taus, CorrelationCurve};
use crate::dynamics::{steady_state, Engine};
use crate::error::{Error, Result};
use crate::linalg::{eig, expm, solve_dense, CsrMatrix};
use crate::model::SystemConfig;
use crate::superop::Superoperator;
use faer::Mat;
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::FRAC_1_SQRT_2;

const Z: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug)]
pub struct QuadraticModel {
    /// `N×2` couplings, row `n` = `(g_n e^{iφ_n}, g_n e^{−iφ_n})`.
    pub g: Mat<C64>,
    /// Emitter-mode detunings from the cavity frame.
    pub deltas: Vec<f64>,
    pub g_bs: f64,
    pub kappa: f64,
    pub decay: Vec<f64>,
    pub pump: Vec<f64>,
    /// Optional pairing terms `λ x_i† x_j† + h.c.` (indices in the full
    /// mode ordering). Empty for the excitation-conserving model.
    pub pairing: Vec<(usize, usize, C64)>,
    pub flags: Vec<String>,
}

impl QuadraticModel {
    /// Uniform pump and decay, common detuning.
    pub fn uniform(gs: &[f64], phis: &[f64], delta: f64, g_bs: f64, kappa: f64, decay: f64, pump: f64) -> Self {
        let n = gs.len();
        Self {
            g: Mat::from_fn(n, 2, |i, k| C64::from_polar(gs[i], if k == 0 { phis[i] } else { -phis[i] })),
            deltas: vec![delta; n],
            g_bs,
            kappa,
            decay: vec![decay; n],
            pump: vec![pump; n],
            pairing: Vec::new(),
            flags: Vec::new(),
        }
    }

    /// Matched bosonic model of a two-level emitter configuration: pump
    /// `γ^ex`, decay `γ + 2γ^ex`, so that occupation `γ^ex/(γ+γ^ex)` and
    /// relaxation rate `γ + γ^ex` agree with the spin. Pure dephasing has no
    /// Gaussian counterpart and is dropped (flagged).
    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        if config.levels().iter().any(|&l| l != 2) {
            return Err(Error::param("emitters", "bosonic model needs two-level emitters"));
        }
        let e = &config.emitters;
        let n = e.len();
        let mut flags = Vec::new();
        if e.iter().any(|e| e.gamma_deph > 0.0) {
            flags.push("pure dephasing ignored in the Gaussian model".into());
        }
        Ok(Self {
            g: Mat::from_fn(n, 2, |i, k| C64::from_polar(e[i].g, if k == 0 { e[i].phi } else { -e[i].phi })),
            deltas: e.iter().map(|e| e.delta - config.cavity.detuning_cav).collect(),
            g_bs: config.cavity.g_bs,
            kappa: config.cavity.kappa(),
            decay: e.iter().map(|e| e.gamma + 2.0 * e.gamma_ex).collect(),
            pump: e.iter().map(|e| e.gamma_ex).collect(),
            pairing: Vec::new(),
            flags,
        })
    }

    pub fn n_emitters(&self) -> usize {
        self.g.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.n_emitters() + 2
    }

    /// Mode index of a channel label (`a`, `b`, `d0`, `d1`, …).
    pub fn mode_index(&self, label: &str) -> Result<usize> {
        match label {
            "a" => Ok(0),
            "b" => Ok(1),
            _ => label
                .strip_prefix('d')
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|&k| k < self.n_emitters())
                .map(|k| k + 2)
                .ok_or_else(|| Error::UnknownChannel(label.into())),
        }
    }

    /// Hermitian single-particle matrix `M`.
    pub fn hamiltonian_matrix(&self) -> Mat<C64> {
        let n = self.n_emitters();
        let mut m = Mat::<C64>::zeros(n + 2, n + 2);
        m[(0, 1)] = C64::new(self.g_bs, 0.0);
        m[(1, 0)] = C64::new(self.g_bs, 0.0);
        for i in 0..n {
            m[(i + 2, i + 2)] = C64::new(self.deltas[i], 0.0);
            for k in 0..2 {
                let c = self.g[(i, k)] * FRAC_1_SQRT_2;
                m[(i + 2, k)] = c;
                m[(k, i + 2)] = c.conj();
            }
        }
        m
    }

    fn net_loss(&self) -> Vec<f64> {
        let mut v = vec![self.kappa, self.kappa];
        v.extend(self.decay.iter().zip(&self.pump).map(|(d, p)| d - p));
        v
    }

    fn gains(&self) -> Vec<f64> {
        let mut v = vec![0.0, 0.0];
        v.extend_from_slice(&self.pump);
        v
    }

    /// Drift `A` and pairing `B`.
    pub fn drift(&self) -> (Mat<C64>, Mat<C64>) {
        let m = self.hamiltonian_matrix();
        let loss = self.net_loss();
        let dim = m.nrows();
        let a = Mat::from_fn(dim, dim, |i, j| {
            let d = if i == j { C64::new(-0.5 * loss[i], 0.0) } else { Z };
            C64::new(0.0, -1.0) * m[(i, j)] + d
        });
        let mut b = Mat::<C64>::zeros(dim, dim);
        for &(i, j, lam) in &self.pairing {
            let s = if i == j { 2.0 * lam } else { lam };
            b[(i, j)] += C64::new(0.0, -1.0) * s;
            if i != j {
                b[(j, i)] += C64::new(0.0, -1.0) * s;
            }
        }
        (a, b)
    }

    /// First-moment generator on `(⟨x⟩, ⟨x†⟩)`.
    fn big_drift(&self) -> Mat<C64> {
        let (a, b) = self.drift();
        let m = a.nrows();
        Mat::from_fn(2 * m, 2 * m, |i, j| match (i < m, j < m) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - m)],
            (false, true) => b[(i - m, j)].conj(),
            (false, false) => a[(i - m, j - m)].conj(),
        })
    }

    pub fn is_hurwitz(&self) -> Result<bool> {
        let (vals, _) = eig(&self.big_drift()).ok_or_else(|| Error::Solver("drift eigenvalues".into()))?;
        Ok(vals.iter().all(|l| l.re < 0.0))
    }
}

fn matmul(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    a * b
}

/// Stationary second moments.
#[derive(Clone, Debug)]
pub struct GaussianState {
    /// `N_ij = ⟨x_i† x_j⟩`.
    pub normal: Mat<C64>,
    /// `X_ij = ⟨x_i x_j⟩`.
    pub anomalous: Mat<C64>,
    pub residual: f64,
    pub flags: Vec<String>,
}

impl GaussianState {
    pub fn occupation(&self, mode: usize) -> f64 {
        self.normal[(mode, mode)].re
    }

    pub fn has_anomalous(&self) -> bool {
        let m = self.anomalous.nrows();
        (0..m).any(|i| (0..m).any(|j| self.anomalous[(i, j)].norm() > 1e-14))
    }
}

/// Right-hand side of the moment equations, split into the three blocks
/// `(N, X, X̄)`.
fn moment_rhs(
    a: &Mat<C64>,
    b: &Mat<C64>,
    gain: &[f64],
    n: &Mat<C64>,
    x: &Mat<C64>,
    xc: &Mat<C64>,
    constant: bool,
) -> [Mat<C64>; 3] {
    let m = a.nrows();
    let ac = Mat::from_fn(m, m, |i, j| a[(i, j)].conj());
    let bc = Mat::from_fn(m, m, |i, j| b[(i, j)].conj());
    let at = a.transpose().to_owned();
    let act = ac.transpose().to_owned();
    let bt = b.transpose().to_owned();
    let nt = n.transpose().to_owned();
    let mut dn = &(&matmul(&ac, n) + &matmul(n, &at)) + &(&matmul(&bc, x) + &matmul(xc, &bt));
    let mut dx = &(&matmul(a, x) + &matmul(x, &at)) + &(&matmul(b, n) + &matmul(&nt, b));
    let mut dxc = &(&matmul(&ac, xc) + &matmul(xc, &act)) + &(&matmul(&bc, &nt) + &matmul(n, &bc));
    if constant {
        for i in 0..m {
            dn[(i, i)] += C64::new(gain[i], 0.0);
        }
        dx = &dx + b;
        dxc = &dxc + &bc;
    }
    [dn, dx, dxc]
}

/// Solves the stationary moment equations (a Lyapunov equation for `N`
/// in the excitation-conserving case).
pub fn gaussian_steady_state(model: &QuadraticModel) -> Result<GaussianState> {
    if !model.is_hurwitz()? {
        return Err(Error::Unstable("drift matrix is not Hurwitz (pump ≥ decay)".into()));
    }
    let (a, b) = model.drift();
    let gain = model.gains();
    let m = a.nrows();
    let blocks = if model.pairing.is_empty() { 1 } else { 3 };
    let unknowns = blocks * m * m;
    let zero = Mat::<C64>::zeros(m, m);
    let unpack = |u: &[C64]| -> [Mat<C64>; 3] {
        let blk = |k: usize| {
            if k < blocks {
                Mat::from_fn(m, m, |i, j| u[k * m * m + i * m + j])
            } else {
                zero.clone()
            }
        };
        [blk(0), blk(1), blk(2)]
    };
    let pack = |r: &[Mat<C64>; 3]| -> Vec<C64> {
        (0..blocks)
            .flat_map(|k| (0..m * m).map(move |q| (k, q)))
            .map(|(k, q)| r[k][(q / m, q % m)])
            .collect()
    };
    let apply = |u: &[C64], constant: bool| {
        let [n, x, xc] = unpack(u);
        pack(&moment_rhs(&a, &b, &gain, &n, &x, &xc, constant))
    };
    let c = apply(&vec![Z; unknowns], true);
    let mut lmat = Mat::<C64>::zeros(unknowns, unknowns);
    let mut e = vec![Z; unknowns];
    for k in 0..unknowns {
        e[k] = C64::new(1.0, 0.0);
        for (i, v) in apply(&e, false).into_iter().enumerate() {
            lmat[(i, k)] = v;
        }
        e[k] = Z;
    }
    let rhs: Vec<C64> = c.iter().map(|v| -v).collect();
    let u = solve_dense(&lmat, &rhs);
    let res: f64 = apply(&u, true).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = lmat_norm(&lmat) * u.iter().map(|v| v.norm()).fold(0.0, f64::max)
        + c.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let residual = res / scale.max(f64::MIN_POSITIVE);
    if residual > 1e-10 {
        return Err(Error::Solver(format!("Lyapunov residual {residual:.3e}")));
    }
    let [mut n, x, _] = unpack(&u);
    // enforce exact Hermiticity of the normal block
    for i in 0..m {
        for j in 0..=i {
            let h = 0.5 * (n[(i, j)] + n[(j, i)].conj());
            n[(i, j)] = h;
            n[(j, i)] = h.conj();
        }
    }
    let mut flags = model.flags.clone();
    let state = GaussianState {
        normal: n,
        anomalous: x,
        residual,
        flags: Vec::new(),
    };
    if state.has_anomalous() {
        flags.push("anomalous correlations present; extended Wick expansion".into());
    }
    Ok(GaussianState { flags, ..state })
}

fn lmat_norm(m: &Mat<C64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Raw `⟨x†(0) y†(τ) y(τ) x(0)⟩` for `τ ≥ 0` by Wick factorization.
pub fn gaussian_two_time(model: &QuadraticModel, state: &GaussianState, x: usize, y: usize, taus: &[f64]) -> Result<Vec<f64>> {
    if taus.iter().any(|&t| t < 0.0) {
        return Err(Error::Domain("delays must be non-negative".into()));
    }
    let big = model.big_drift();
    let m = model.n_modes();
    let n = &state.normal;
    let xm = &state.anomalous;
    // initial traces against ρ x† and x ρ, on (x_k, x_k†)
    let q1: Vec<C64> = (0..2 * m)
        .map(|k| if k < m { n[(x, k)] } else { xm[(k - m, x)].conj() })
        .collect();
    let q2: Vec<C64> = (0..2 * m)
        .map(|k| if k < m { xm[(k, x)] } else { n[(k - m, x)] })
        .collect();
    let stationary = n[(x, x)].re * n[(y, y)].re;
    Ok(taus
        .iter()
        .map(|&t| {
            let p = expm(&Mat::from_fn(2 * m, 2 * m, |i, j| big[(i, j)] * t));
            let prop = |v: &[C64], row: usize| (0..2 * m).fold(Z, |acc, j| acc + p[(row, j)] * v[j]);
            let (c1, c2) = (prop(&q1, y), prop(&q1, y + m));
            let (d1, d2) = (prop(&q2, y), prop(&q2, y + m));
            stationary + (c1 * d2 + c2 * d1).re
        })
        .collect())
}

/// Normalized `g²_{xy}` on the symmetric grid built from `pos` (starting
/// at zero).
pub fn gaussian_g2(model: &QuadraticModel, pair: (&str, &str), pos: &[f64]) -> Result<CorrelationCurve> {
    if pos.first() != Some(&0.0) {
        return Err(Error::Domain("delay grid must start at zero".into()));
    }
    let state = gaussian_steady_state(model)?;
    let (x, y) = (model.mode_index(pair.0)?, model.mode_index(pair.1)?);
    let norm = state.occupation(x) * state.occupation(y);
    if norm < 1e-32 {
        return Err(Error::ZeroIntensity(format!("{}{}", pair.0, pair.1)));
    }
    let fwd = gaussian_two_time(model, &state, x, y, pos)?;
    let bwd = if x == y { fwd.clone() } else { gaussian_two_time(model, &state, y, x, pos)? };
    let values = bwd.iter().skip(1).rev().chain(fwd.iter()).map(|v| v / norm).collect();
    Ok(CorrelationCurve {
        taus: symmetric_taus(pos),
        values,
        order: 2,
        channels: vec![pair.0.into(), pair.1.into()],
        normalization: norm,
        flags: state.flags,
    })
}

/// Householder QR without pivoting, phases fixed so that `R` has a real
/// non-negative diagonal.
pub fn householder_qr(g: &Mat<C64>) -> (Mat<C64>, Mat<C64>) {
    let (rows, cols) = (g.nrows(), g.ncols());
    let mut r = g.clone();
    let mut q = Mat::<C64>::identity(rows, rows);
    for k in 0..cols.min(rows) {
        let norm = (k..rows).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = (k..rows).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if vv == 0.0 {
            continue;
        }
        // r ← (I − 2vv†/v†v) r, q ← q (I − 2vv†/v†v)
        for j in 0..cols {
            let s = (0..v.len()).fold(Z, |acc, i| acc + v[i].conj() * r[(k + i, j)]) * (2.0 / vv);
            for i in 0..v.len() {
                r[(k + i, j)] -= v[i] * s;
            }
        }
        for i in 0..rows {
            let s = (0..v.len()).fold(Z, |acc, l| acc + q[(i, k + l)] * v[l]) * (2.0 / vv);
            for l in 0..v.len() {
                q[(i, k + l)] -= s * v[l].conj();
            }
        }
    }
    for k in 0..cols.min(rows) {
        let d = r[(k, k)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            for j in 0..cols {
                r[(k, j)] *= ph.conj();
            }
            for i in 0..rows {
                q[(i, k)] *= ph;
            }
        }
    }
    let rank_rows = cols.min(rows);
    let r = Mat::from_fn(rank_rows, cols, |i, j| if i > j { Z } else { r[(i, j)] });
    (q, r)
}

/// Chain representation: `d = Q†d_orig`; mode `a` couples only to `d₁`,
/// mode `b` to `d₁` and `d₂`, with amplitudes `R/√2`.
#[derive(Clone, Debug)]
pub struct QrChain {
    pub q: Mat<C64>,
    pub r: Mat<C64>,
    pub rank: usize,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct QrReduction {
    pub primary: QrChain,
    /// Decomposition with the roles of `a` and `b` exchanged.
    pub mirrored: QrChain,
}

fn chain(g: &Mat<C64>) -> QrChain {
    let (q, r) = householder_qr(g);
    let scale = (0..g.nrows())
        .flat_map(|i| (0..g.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| g[(i, j)].norm())
        .fold(0.0, f64::max);
    let rank = (0..r.nrows()).filter(|&k| r[(k, k)].norm() > 1e-12 * scale).count();
    let mut flags = Vec::new();
    if rank < g.ncols().min(g.nrows()) {
        flags.push(format!("rank-deficient coupling matrix: chain shortened to {rank}"));
    }
    QrChain { q, r, rank, flags }
}

pub fn qr_reduce(g: &Mat<C64>) -> QrReduction {
    let swapped = Mat::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, g.ncols() - 1 - j)]);
    QrReduction {
        primary: chain(g),
        mirrored: chain(&swapped),
    }
}

/// Truncated-Fock reference for the quadratic model (`cutoff` photons per
/// mode), with regression channels `a` and `b`.
pub fn fock_reference(model: &QuadraticModel, cutoff: usize) -> Result<Engine> {
    let m = model.n_modes();
    let levels = cutoff + 1;
    const SECTOR_CAP: usize = 40_000;
    let dim = levels
        .checked_pow(m as u32)
        .filter(|&d| d <= 4096)
        .ok_or(Error::Capacity { dim: usize::MAX, cap: 4096 })?;
    // the stationary sector (equal photon number of ket and bra) is what the
    // sparse solver factorizes
    let mut counts = vec![0usize; m * cutoff + 1];
    for i in 0..dim {
        let (mut q, mut r) = (0, i);
        for _ in 0..m {
            q += r % levels;
            r /= levels;
        }
        counts[q] += 1;
    }
    let sector: usize = counts.iter().map(|c| c * c).sum();
    if model.pairing.is_empty() && sector > SECTOR_CAP || !model.pairing.is_empty() && dim * dim > SECTOR_CAP {
        return Err(Error::Capacity { dim: sector.max(dim), cap: SECTOR_CAP });
    }
    let single = CsrMatrix::from_triplets(
        levels,
        levels,
        (1..levels).map(|k| (k - 1, k, C64::new((k as f64).sqrt(), 0.0))),
    );
    let ops: Vec<CsrMatrix> = (0..m)
        .map(|k| {
            let mut op = CsrMatrix::identity(1);
            for f in 0..m {
                let factor = if f == k { single.clone() } else { CsrMatrix::identity(levels) };
                op = op.kron(&factor);
            }
            op
        })
        .collect();
    let hm = model.hamiltonian_matrix();
    let mut h = CsrMatrix::zeros(dim, dim);
    for i in 0..m {
        for j in 0..m {
            if hm[(i, j)].norm() > 0.0 {
                h = h.add(&ops[i].adjoint().matmul(&ops[j]).scale(hm[(i, j)]));
            }
        }
    }
    for &(i, j, lam) in &model.pairing {
        let p = ops[i].adjoint().matmul(&ops[j].adjoint()).scale(lam);
        h = h.add(&p).add(&p.adjoint());
    }
    let loss = {
        let mut v = vec![model.kappa, model.kappa];
        v.extend_from_slice(&model.decay);
        v
    };
    let gain = model.gains();
    let mut jumps = Vec::new();
    for k in 0..m {
        if loss[k] > 0.0 {
            jumps.push(ops[k].scale(C64::new(loss[k].sqrt(), 0.0)));
        }
        if gain[k] > 0.0 {
            jumps.push(ops[k].adjoint().scale(C64::new(gain[k].sqrt(), 0.0)));
        }
    }
    let charges = model.pairing.is_empty().then(|| {
        (0..dim)
            .map(|mut i| {
                let mut q = 0;
                for _ in 0..m {
                    q += (i % levels) as i32;
                    i /= levels;
                }
                q
            })
            .collect()
    });
    let l = Superoperator::lindblad(&h, &jumps, charges);
    let mut engine = Engine::with_state(
        steady_state(&l)?,
        vec![("a".into(), ops[0].clone()), ("b".into(), ops[1].clone())],
    );
    engine.flags.push(format!("truncated Fock reference, cutoff {cutoff}"));
    Ok(engine)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpinBosonReport {
    pub spin_chirality: f64,
    pub boson_chirality: f64,
    pub spin_intensities: [f64; 2],
    pub boson_intensities: [f64; 2],
    /// Largest `|g²_spin − g²_boson|` over `aa`, `bb`, `ab`.
    pub max_curve_deviation: f64,
    pub flags: Vec<String>,
}

/// Runs the emitter model and its bosonic analogue on matched parameters.
pub fn spin_vs_boson_compare(config: &SystemConfig, pos: &[f64]) -> Result<SpinBosonReport> {
    let engine = Engine::from_config(config)?;
    let boson = QuadraticModel::from_config(config)?;
    let state = gaussian_steady_state(&boson)?;
    let mut dev: f64 = 0.0;
    let mut chir = (0.0, 0.0);
    for pair in [("a", "a"), ("b", "b"), ("a", "b")] {
        let s = engine.g2(pair.0, pair.1, pos)?;
        let b = gaussian_g2(&boson, pair, pos)?;
        dev = dev.max(max_deviation(&s, &b));
        if pair == ("a", "b") {
            chir = (chirality_metric(&s)?, chirality_metric(&b)?);
        }
    }
    let mut flags = engine.flags.clone();
    flags.extend(state.flags.iter().cloned());
    Ok(SpinBosonReport {
        spin_chirality: chir.0,
        boson_chirality: chir.1,
        spin_intensities: [engine.intensity("a")?, engine.intensity("b")?],
        boson_intensities: [state.occupation(0), state.occupation(1)],
        max_curve_deviation: dev,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_pump_gives_vacuum() {
        let m = QuadraticModel::uniform(&[0.3, 0.2], &[0.1, 0.7], 0.0, 0.1, 1.0, 0.2, 0.0);
        let s = gaussian_steady_state(&m).unwrap();
        assert!((0..4).all(|i| (0..4).all(|j| s.normal[(i, j)].norm() < 1e-15)));
    }

    #[test]
    fn single_mode_thermal_balance() {
        let m = QuadraticModel::uniform(&[0.0], &[0.0], 0.0, 0.0, 1.0, 1.0, 0.3);
        let s = gaussian_steady_state(&m).unwrap();
        assert!((s.occupation(2) - 0.3 / 0.7).abs() < 1e-13);
        let g = gaussian_two_time(&m, &s, 2, 2, &[0.0]).unwrap()[0] / s.occupation(2).powi(2);
        assert!((g - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unstable_pump_rejected() {
        let m = QuadraticModel::uniform(&[0.1], &[0.0], 0.0, 0.0, 1.0, 0.5, 0.6);
        assert!(matches!(gaussian_steady_state(&m), Err(Error::Unstable(_))));
    }

    #[test]
    fn qr_single_emitter_is_row() {
        let m = QuadraticModel::uniform(&[0.4], &[0.3], 0.0, 0.0, 1.0, 1.0, 0.1);
        let red = qr_reduce(&m.g);
        assert_eq!(red.primary.r.nrows(), 1);
        assert!((red.primary.r[(0, 0)].norm() - 0.4).abs() < 1e-15);
        assert!((red.primary.r[(0, 1)].norm() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn qr_rank_one_for_equal_phases() {
        let m = QuadraticModel::uniform(&[0.4, 0.2], &[0.0, 0.0], 0.0, 0.0, 1.0, 1.0, 0.1);
        let red = qr_reduce(&m.g);
        assert_eq!(red.primary.rank, 1);
        assert!(!red.primary.flags.is_empty());
    }

    #[test]
    fn qr_reconstructs() {
        let m = QuadraticModel::uniform(&[0.4, 0.2, 0.5], &[0.1, 1.3, 2.2], 0.0, 0.0, 1.0, 1.0, 0.1);
        let (q, r) = householder_qr(&m.g);
        for i in 0..3 {
            for j in 0..2 {
                let v = (0..2).fold(Z, |acc, k| acc + q[(i, k)] * r[(k, j)]);
                assert!((v - m.g[(i, j)]).norm() < 1e-14);
            }
        }
        let qq = q.adjoint() * &q;
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((qq[(i, j)] - e).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn squeezing_uses_extended_branch() {
        let mut m = QuadraticModel::uniform(&[0.0], &[0.0], 0.0, 0.0, 1.0, 1.0, 0.0);
        m.pairing.push((0, 1, C64::new(0.1, 0.0)));
        let s = gaussian_steady_state(&m).unwrap();
        assert!(s.has_anomalous());
        assert!(s.flags.iter().any(|f| f.contains("Wick")));
        let fock = fock_reference(&m, 4).unwrap();
        let na = fock.intensity("a").unwrap();
        assert!((s.occupation(0) - na).abs() / na < 1e-3);
        let g = gaussian_g2(&m, ("a", "b"), &[0.0, 0.5, 2.0]).unwrap();
        let gf = fock.g2("a", "b", &[0.0, 0.5, 2.0]).unwrap();
        assert!(max_deviation(&g, &gf) / g.values[2] < 1e-2, "{:?} {:?}", g.values, gf.values);
    }
}
