//! Steady states, time evolution and regression-theorem correlations.

use crate::correlation::{chirality_metric, default_tau_grid, symmetric_taus, CorrelationCurve, CorrelationSurface};
use crate::error::{Error, Result};
use crate::linalg::{eig, vec_max_abs, CsrMatrix, ONE, ZERO};
use crate::model::{Model, SystemConfig};
use crate::ode::{integrate_with, Generator, OdeOptions};
use crate::space::{Mode, Operator};
use crate::superop::{Sector, Superoperator};
use faer::prelude::*;
use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Dense row-major density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl DensityMatrix {
    pub fn pure(dim: usize, index: usize) -> Self {
        let mut data = vec![ZERO; dim * dim];
        data[index * dim + index] = ONE;
        Self { dim, data }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        Self { dim, data }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn expect(&self, op: &Operator) -> C64 {
        op.triplets().map(|(r, c, v)| v * self.get(c, r)).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        m
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = Mat::from_fn(self.dim, self.dim, |i, j| {
            0.5 * (self.get(i, j) + self.get(j, i).conj())
        });
        crate::linalg::eigh(&m)
            .map(|(v, _)| v[0])
            .unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SteadyMethod {
    SparseLu,
    DenseNullSpace,
    Propagation,
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub sector: Sector,
    /// State restricted to the sector.
    pub vec: Vec<C64>,
    /// `‖L ρ‖_∞ / ‖L‖_∞`.
    pub residual: f64,
    /// Estimated magnitude of the slowest nonzero eigenvalue of `L`.
    pub gap: Option<f64>,
    pub method: SteadyMethod,
}

impl SteadyState {
    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix {
            dim: self.sector.hilbert_dim(),
            data: self.sector.to_dense(&self.vec),
        }
    }

    pub fn expect(&self, op: &Operator) -> C64 {
        dot(&self.sector.weights(op), &self.vec)
    }
}

pub(crate) fn dot(w: &[C64], v: &[C64]) -> C64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Relative gap below which the steady state is declared degenerate.
const GAP_TOL: f64 = 1e-12;
/// Sector size up to which dense eigen-analysis is used as a fallback.
const DENSE_LIMIT: usize = 2500;

/// Steady state of `L` (via its stationary charge sector).
pub fn steady_state(l: &Superoperator) -> Result<SteadyState> {
    steady_state_in(l.stationary_sector())
}

pub fn steady_state_in(sector: Sector) -> Result<SteadyState> {
    let n = sector.len();
    let lnorm = sector.matrix.norm_inf();
    let diag = sector.diagonal_positions();
    if lnorm == 0.0 {
        return Err(Error::DegenerateSteadyState {
            multiplicity: diag.len(),
            basis: Vec::new(),
        });
    }
    match lu_solve(&sector, &diag, lnorm) {
        Some((vec, gap)) if gap.is_none_or(|g| g > GAP_TOL * lnorm) => {
            let residual = residual(&sector.matrix, &vec, lnorm);
            if residual < 1e-10 {
                return Ok(SteadyState {
                    sector,
                    vec,
                    residual,
                    gap,
                    method: SteadyMethod::SparseLu,
                });
            }
        }
        _ => {}
    }
    if n <= DENSE_LIMIT {
        return dense_null_space(sector, lnorm);
    }
    propagate_to_steady(sector, lnorm)
}

fn residual(l: &CsrMatrix, v: &[C64], lnorm: f64) -> f64 {
    vec_max_abs(&l.apply(v)) / (lnorm * vec_max_abs(v))
}

fn finish(sector: &Sector, mut v: Vec<C64>) -> Option<Vec<C64>> {
    let d = sector.hilbert_dim();
    // Hermitian part; the sector is closed under transposition.
    let dense = sector.to_dense(&v);
    for (p, &k) in sector.indices().iter().enumerate() {
        let (i, j) = (k / d, k % d);
        v[p] = 0.5 * (dense[i * d + j] + dense[j * d + i].conj());
    }
    let tr = sector.trace(&v);
    if !tr.re.is_finite() || tr.norm() == 0.0 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= tr);
    v.iter().all(|x| x.re.is_finite() && x.im.is_finite()).then_some(v)
}

/// Solves `L ρ = 0` with the first diagonal row replaced by the trace
/// condition, then estimates the slowest relaxation rate by Arnoldi
/// iteration on `L⁻¹` over traceless operators (the same factorization
/// inverts `L` there exactly).
fn lu_solve(sector: &Sector, diag: &[usize], lnorm: f64) -> Option<(Vec<C64>, Option<f64>)> {
    let n = sector.len();
    let p0 = diag[0];
    let scale = C64::new(lnorm, 0.0);
    let trips: Vec<_> = sector
        .matrix
        .triplets()
        .filter(|&(r, _, _)| r != p0)
        .chain(diag.iter().map(|&p| (p0, p, scale)))
        .collect();
    let m = CsrMatrix::from_triplets(n, n, trips).to_faer_sparse();
    let lu = m.sp_lu().ok()?;
    let mut rhs = Mat::<C64>::zeros(n, 1);
    rhs[(p0, 0)] = scale;
    let x = lu.solve(&rhs);
    let v = finish(sector, (0..n).map(|i| x[(i, 0)]).collect())?;

    let steps = 24.min(n.saturating_sub(1));
    if steps == 0 {
        return Some((v, None));
    }
    // Deterministic traceless start vector.
    let mut q0: Vec<C64> = (0..n)
        .map(|i| C64::new(((i * 7919) % 1013) as f64 / 1013.0 - 0.5, ((i * 104729) % 997) as f64 / 997.0 - 0.5))
        .collect();
    let mean: C64 = diag.iter().map(|&p| q0[p]).sum::<C64>() / diag.len() as f64;
    for &p in diag {
        q0[p] -= mean;
    }
    let apply = |y: &[C64]| -> Vec<C64> {
        let mut b = Mat::<C64>::zeros(n, 1);
        for i in 0..n {
            b[(i, 0)] = y[i];
        }
        b[(p0, 0)] = ZERO;
        let x = lu.solve(&b);
        (0..n).map(|i| x[(i, 0)]).collect()
    };
    let ritz = arnoldi(apply, q0, steps)?;
    let mu_max = ritz.iter().map(|m| m.norm()).fold(0.0, f64::max);
    if !mu_max.is_finite() {
        return Some((v, Some(0.0)));
    }
    Some((v, Some(1.0 / mu_max)))
}

/// Ritz values of `op` from `m` Arnoldi steps.
fn arnoldi<F: Fn(&[C64]) -> Vec<C64>>(op: F, start: Vec<C64>, m: usize) -> Option<Vec<C64>> {
    let norm = |v: &[C64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let n0 = norm(&start);
    if n0 == 0.0 {
        return None;
    }
    let mut basis = vec![start.iter().map(|x| x / n0).collect::<Vec<_>>()];
    let mut h = Mat::<C64>::zeros(m, m);
    let mut size = m;
    for j in 0..m {
        let mut w = op(&basis[j]);
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c: C64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                h[(i, j)] += c;
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nw = norm(&w);
        if j + 1 == m {
            break;
        }
        if nw < 1e-14 * h[(j, j)].norm().max(1e-300) {
            size = j + 1;
            break;
        }
        h[(j + 1, j)] = C64::new(nw, 0.0);
        basis.push(w.iter().map(|x| x / nw).collect());
    }
    let hs = Mat::from_fn(size, size, |i, j| h[(i, j)]);
    eig(&hs).map(|(vals, _)| vals)
}

fn dense_null_space(sector: Sector, lnorm: f64) -> Result<SteadyState> {
    let dense = sector.matrix.to_dense();
    let (vals, vecs) = eig(&dense).ok_or_else(|| Error::Solver("dense eigensolver failed".into()))?;
    let zero: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].norm() <= 1e-9 * lnorm).collect();
    let col = |k: usize| -> Vec<C64> { (0..dense.nrows()).map(|i| vecs[(i, k)]).collect() };
    if zero.len() > 1 {
        return Err(Error::DegenerateSteadyState {
            multiplicity: zero.len(),
            basis: zero.iter().map(|&k| sector.to_dense(&col(k))).collect(),
        });
    }
    let k = match zero.first() {
        Some(&k) => k,
        None => (0..vals.len())
            .min_by(|&a, &b| vals[a].norm().total_cmp(&vals[b].norm()))
            .ok_or_else(|| Error::Solver("empty sector".into()))?,
    };
    let vec = finish(&sector, col(k)).ok_or_else(|| Error::Solver("null vector is traceless".into()))?;
    let residual = residual(&sector.matrix, &vec, lnorm);
    let mut rest: Vec<f64> = (0..vals.len()).filter(|&i| i != k).map(|i| vals[i].re.abs()).collect();
    rest.sort_by(f64::total_cmp);
    Ok(SteadyState {
        sector,
        vec,
        residual,
        gap: rest.first().copied(),
        method: SteadyMethod::DenseNullSpace,
    })
}

fn propagate_to_steady(sector: Sector, lnorm: f64) -> Result<SteadyState> {
    let d = sector.hilbert_dim();
    let mut v = sector.from_dense(&DensityMatrix::maximally_mixed(d).data);
    let mut t = 1e3 / lnorm;
    for _ in 0..40 {
        let mut next = Vec::new();
        integrate_with(&sector.matrix, 0.0, &v, &[t], &OdeOptions::default(), |_, _, y| {
            next = y.to_vec()
        })?;
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        v = next;
        if change < 1e-12 {
            break;
        }
        t *= 2.0;
    }
    let vec = finish(&sector, v).ok_or_else(|| Error::Solver("propagation diverged".into()))?;
    let residual = residual(&sector.matrix, &vec, lnorm);
    if residual > 1e-8 {
        return Err(Error::DegenerateSteadyState {
            multiplicity: 0,
            basis: Vec::new(),
        });
    }
    Ok(SteadyState {
        sector,
        vec,
        residual,
        gap: None,
        method: SteadyMethod::Propagation,
    })
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Largest `|Tr ρ(t) − Tr ρ(0)|` before renormalization.
    pub trace_drift: f64,
}

/// Integrates `dρ/dt = L ρ` and returns the states on `t_grid`, each
/// renormalized to the initial trace.
pub fn evolve(l: &Superoperator, rho0: &DensityMatrix, t_grid: &[f64]) -> Result<Trajectory> {
    evolve_with(&l.matrix, rho0, t_grid, &OdeOptions::default())
}

pub fn evolve_with<G: Generator + ?Sized>(
    gen: &G,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory> {
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time grid must be strictly increasing".into()));
    }
    let d = rho0.dim;
    let tr0 = rho0.trace();
    let mut states = Vec::with_capacity(t_grid.len());
    let mut drift: f64 = 0.0;
    let t0 = t_grid.first().copied().unwrap_or(0.0);
    integrate_with(gen, t0, &rho0.data, t_grid, opts, |_, _, y| {
        let tr: C64 = (0..d).map(|i| y[i * d + i]).sum();
        drift = drift.max((tr - tr0).norm());
        let s = if tr.norm() > 0.0 { tr0 / tr } else { ONE };
        states.push(DensityMatrix {
            dim: d,
            data: y.iter().map(|x| x * s).collect(),
        });
    })?;
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        trace_drift: drift,
    })
}

/// A named detection channel (annihilation-type operator).
#[derive(Clone, Debug)]
pub struct Channel {
    pub label: String,
    pub op: Operator,
    number_weights: Vec<C64>,
    pub intensity: f64,
}

/// Regression-theorem engine: a stationary state, its sector generator and a
/// set of detection channels.
#[derive(Clone, Debug)]
pub struct Engine {
    pub steady: SteadyState,
    pub channels: Vec<Channel>,
    pub opts: OdeOptions,
    pub flags: Vec<String>,
}

/// Intensities below this are treated as exactly zero.
const ZERO_INTENSITY: f64 = 1e-16;

impl Engine {
    pub fn new(l: &Superoperator, channels: Vec<(String, Operator)>) -> Result<Self> {
        Ok(Self::with_state(steady_state(l)?, channels))
    }

    pub fn with_state(steady: SteadyState, channels: Vec<(String, Operator)>) -> Self {
        let mut flags = Vec::new();
        if steady.residual > 1e-8 {
            flags.push(format!("non-stationary state (residual {:e})", steady.residual));
        }
        let channels = channels
            .into_iter()
            .map(|(label, op)| {
                let n = op.adjoint().matmul(&op);
                let number_weights = steady.sector.weights(&n);
                let intensity = dot(&number_weights, &steady.vec).re;
                Channel {
                    label,
                    op,
                    number_weights,
                    intensity,
                }
            })
            .collect();
        Self {
            steady,
            channels,
            opts: OdeOptions::default(),
            flags,
        }
    }

    /// Full cavity model with one channel per cavity mode.
    pub fn from_model(model: &Model) -> Result<Self> {
        let channels = model
            .space
            .modes()
            .iter()
            .map(|&m| Ok((m.label().to_string(), model.annihilation(m)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(&model.liouvillian(), channels)
    }

    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        Self::from_model(&Model::new(config)?)
    }

    pub fn channel(&self, label: &str) -> Result<&Channel> {
        self.channels
            .iter()
            .find(|c| c.label == label)
            .ok_or_else(|| Error::UnknownChannel(label.into()))
    }

    pub fn intensity(&self, label: &str) -> Result<f64> {
        Ok(self.channel(label)?.intensity)
    }

    fn normalizer(&self, labels: &[&str]) -> Result<f64> {
        let mut n = 1.0;
        for l in labels {
            let i = self.intensity(l)?;
            if i.abs() < ZERO_INTENSITY {
                return Err(Error::ZeroIntensity(l.to_string()));
            }
            n *= i;
        }
        Ok(n)
    }

    fn propagate_observe<F>(&self, v0: &[C64], taus: &[f64], mut f: F) -> Result<()>
    where
        F: FnMut(usize, &[C64]),
    {
        let mut order: Vec<usize> = (0..taus.len()).collect();
        order.sort_by(|&a, &b| taus[a].total_cmp(&taus[b]));
        let sorted: Vec<f64> = order.iter().map(|&i| taus[i]).collect();
        if sorted.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::Domain("regression delays must be non-negative".into()));
        }
        integrate_with(&self.steady.sector.matrix, 0.0, v0, &sorted, &self.opts, |k, _, y| {
            f(order[k], y)
        })
    }

    /// Unnormalized `Tr[y†y e^{Lτ}(x ρ x†)]` for `τ ≥ 0`.
    pub fn two_time(&self, x: &str, y: &str, taus: &[f64]) -> Result<Vec<f64>> {
        let cx = self.channel(x)?;
        let cy = self.channel(y)?;
        let v0 = self.steady.sector.sandwich(&cx.op, &self.steady.vec);
        let mut out = vec![0.0; taus.len()];
        self.propagate_observe(&v0, taus, |i, v| out[i] = dot(&cy.number_weights, v).re)?;
        Ok(out)
    }

    /// Unnormalized `Tr[O e^{Lτ}(x ρ x†)]` for an arbitrary observable `O`.
    pub fn two_time_operator(&self, x: &Operator, obs: &Operator, taus: &[f64]) -> Result<Vec<C64>> {
        let v0 = self.steady.sector.sandwich(x, &self.steady.vec);
        let w = self.steady.sector.weights(obs);
        let mut out = vec![ZERO; taus.len()];
        self.propagate_observe(&v0, taus, |i, v| out[i] = dot(&w, v))?;
        Ok(out)
    }

    /// Normalized `g²_{xy}` on `taus ≥ 0` (x detected first).
    pub fn g2_positive(&self, x: &str, y: &str, taus: &[f64]) -> Result<Vec<f64>> {
        let norm = self.normalizer(&[x, y])?;
        Ok(self.two_time(x, y, taus)?.into_iter().map(|v| v / norm).collect())
    }

    /// Normalized `g²_{xy}(τ)` on the symmetric grid built from `pos`
    /// (which must start at zero). Negative delays use `g_{xy}(−τ) = g_{yx}(τ)`.
    pub fn g2(&self, x: &str, y: &str, pos: &[f64]) -> Result<CorrelationCurve> {
        if pos.first() != Some(&0.0) {
            return Err(Error::Domain("delay grid must start at zero".into()));
        }
        let norm = self.normalizer(&[x, y])?;
        let fwd = self.two_time(x, y, pos)?;
        let bwd = if x == y { fwd.clone() } else { self.two_time(y, x, pos)? };
        let values: Vec<f64> = bwd
            .iter()
            .skip(1)
            .rev()
            .chain(fwd.iter())
            .map(|v| v / norm)
            .collect();
        Ok(CorrelationCurve {
            taus: symmetric_taus(pos),
            values,
            order: 2,
            channels: vec![x.into(), y.into()],
            normalization: norm,
            flags: self.flags.clone(),
        })
    }

    /// Unnormalized ordered third-order correlation
    /// `Tr[z†z e^{L s₂}(y e^{L s₁}(x ρ x†) y†)]` on the product grid
    /// `s1s × s2s` (row-major in `s1s`).
    pub fn three_time_ordered(&self, x: &str, y: &str, z: &str, s1s: &[f64], s2s: &[f64]) -> Result<Vec<f64>> {
        let (cx, cy, cz) = (self.channel(x)?, self.channel(y)?, self.channel(z)?);
        let sector = &self.steady.sector;
        let v0 = sector.sandwich(&cx.op, &self.steady.vec);
        let mut mids = vec![Vec::new(); s1s.len()];
        self.propagate_observe(&v0, s1s, |i, v| mids[i] = sector.sandwich(&cy.op, v))?;
        let rows: Vec<Result<Vec<f64>>> = mids
            .par_iter()
            .map(|m| {
                let mut row = vec![0.0; s2s.len()];
                self.propagate_observe(m, s2s, |j, v| row[j] = dot(&cz.number_weights, v).re)?;
                Ok(row)
            })
            .collect();
        let mut out = Vec::with_capacity(s1s.len() * s2s.len());
        for r in rows {
            out.extend(r?);
        }
        Ok(out)
    }

    /// Normalized `g³` with `x` detected at 0, `y` at `τ₁` and `z` at `τ₂`.
    /// Delays may have any sign: the three detections are time-ordered and
    /// evaluated by nested regression.
    pub fn g3(&self, x: &str, y: &str, z: &str, tau1s: &[f64], tau2s: &[f64]) -> Result<CorrelationSurface> {
        let norm = self.normalizer(&[x, y, z])?;
        // Group points by (time-ordered channels, first gap) → second gaps.
        type Key = (usize, usize, usize);
        let labels = [x, y, z];
        let mut groups: BTreeMap<Key, BTreeMap<u64, Vec<(f64, usize)>>> = BTreeMap::new();
        for (i, &t1) in tau1s.iter().enumerate() {
            for (j, &t2) in tau2s.iter().enumerate() {
                let mut ev = [(0.0, 0usize), (t1, 1), (t2, 2)];
                ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let key = (ev[0].1, ev[1].1, ev[2].1);
                let s1 = ev[1].0 - ev[0].0;
                let s2 = ev[2].0 - ev[1].0;
                groups
                    .entry(key)
                    .or_default()
                    .entry(s1.to_bits())
                    .or_default()
                    .push((s2, i * tau2s.len() + j));
            }
        }
        let mut values = vec![0.0; tau1s.len() * tau2s.len()];
        for ((k1, k2, k3), by_s1) in groups {
            let (c1, c2, c3) = (self.channel(labels[k1])?, self.channel(labels[k2])?, self.channel(labels[k3])?);
            let sector = &self.steady.sector;
            let s1s: Vec<f64> = by_s1.keys().map(|&b| f64::from_bits(b)).collect();
            let v0 = sector.sandwich(&c1.op, &self.steady.vec);
            let mut mids = vec![Vec::new(); s1s.len()];
            self.propagate_observe(&v0, &s1s, |i, v| mids[i] = sector.sandwich(&c2.op, v))?;
            let lists: Vec<&Vec<(f64, usize)>> = by_s1.values().collect();
            let results: Vec<Result<Vec<(usize, f64)>>> = mids
                .par_iter()
                .zip(lists.par_iter())
                .map(|(m, pts)| {
                    let s2s: Vec<f64> = pts.iter().map(|p| p.0).collect();
                    let mut out = Vec::with_capacity(pts.len());
                    self.propagate_observe(m, &s2s, |k, v| {
                        out.push((pts[k].1, dot(&c3.number_weights, v).re))
                    })?;
                    Ok(out)
                })
                .collect();
            for r in results {
                for (idx, v) in r? {
                    values[idx] = v / norm;
                }
            }
        }
        Ok(CorrelationSurface {
            tau1s: tau1s.to_vec(),
            tau2s: tau2s.to_vec(),
            values,
            channels: labels.iter().map(|s| s.to_string()).collect(),
            normalization: norm,
            flags: self.flags.clone(),
        })
    }
}

/// Slowest intrinsic rate of a configuration, `min(κ, γ_n + γ_n^ex ...)`.
pub fn slowest_rate(config: &SystemConfig) -> f64 {
    let mut r = config.cavity.kappa();
    for e in &config.emitters {
        let s = e.gamma + e.gamma_ex + e.gamma_deph;
        if s > 0.0 {
            r = r.min(s);
        }
        if e.gamma_e > 0.0 {
            r = r.min(e.gamma_s);
        }
    }
    r
}

/// Default non-negative grid reaching `20 / slowest_rate`.
pub fn default_grid(config: &SystemConfig) -> Vec<f64> {
    default_tau_grid(20.0 / slowest_rate(config), 400)
}

pub fn g2(config: &SystemConfig, pair: (Mode, Mode), taus: &[f64]) -> Result<CorrelationCurve> {
    Engine::from_config(config)?.g2(pair.0.label(), pair.1.label(), taus)
}

pub fn g3(
    config: &SystemConfig,
    triple: (Mode, Mode, Mode),
    tau1s: &[f64],
    tau2s: &[f64],
) -> Result<CorrelationSurface> {
    Engine::from_config(config)?.g3(triple.0.label(), triple.1.label(), triple.2.label(), tau1s, tau2s)
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub detuning: f64,
    pub curve: CorrelationCurve,
    /// Chirality metric of the cross-correlation (when the pair is `ab`).
    pub chirality: Option<f64>,
    pub intensities: Vec<(String, f64)>,
}

/// Shifts the cavity frame by each offset (all `Δ_n → Δ_n − offset`) and
/// computes `g²` for `pair` at every point, in parallel.
pub fn detuning_sweep(
    config: &SystemConfig,
    offsets: &[f64],
    pair: (Mode, Mode),
    taus: &[f64],
) -> Result<Vec<SweepPoint>> {
    offsets
        .par_iter()
        .map(|&d| {
            let mut cfg = config.clone();
            cfg.cavity.detuning_cav = config.cavity.detuning_cav + d;
            let engine = Engine::from_config(&cfg)?;
            let curve = engine.g2(pair.0.label(), pair.1.label(), taus)?;
            let chirality = if pair.0 != pair.1 {
                Some(chirality_metric(&curve)?)
            } else {
                None
            };
            Ok(SweepPoint {
                detuning: d,
                chirality,
                intensities: engine.channels.iter().map(|c| (c.label.clone(), c.intensity)).collect(),
                curve,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CavityParams, EmitterParams};

    fn cfg(gamma_ex: f64, g: f64) -> SystemConfig {
        SystemConfig::new(
            vec![EmitterParams::two_level(0.0, g, 0.0, 1.0, 0.0, gamma_ex)],
            CavityParams::with_kappa(2.0, 0.0),
            1,
        )
    }

    #[test]
    fn dark_steady_state_is_vacuum() {
        let m = Model::new(&cfg(0.0, 0.5)).unwrap();
        let ss = steady_state(&m.liouvillian()).unwrap();
        let rho = ss.density_matrix();
        assert!((rho.get(0, 0) - ONE).norm() < 1e-12);
    }

    #[test]
    fn pumped_population_matches_rate_equation() {
        let m = Model::new(&cfg(0.3, 0.0)).unwrap();
        let ss = steady_state(&m.liouvillian()).unwrap();
        let p = ss.expect(&m.space.projector(0, 1)).re;
        assert!((p - 0.3 / 1.3).abs() < 1e-12);
        let rho = ss.density_matrix();
        assert!(rho.hermiticity_defect() < 1e-12);
        assert!(rho.min_eigenvalue() > -1e-12);
        assert!(ss.gap.unwrap() > 0.1);
    }

    #[test]
    fn degenerate_steady_state_is_reported() {
        // emitter with no decay and no coupling: any emitter state is stationary
        let mut c = cfg(0.0, 0.0);
        c.emitters[0].gamma = 0.0;
        let l = Model::new(&c).unwrap().liouvillian();
        match steady_state(&l) {
            Err(Error::DegenerateSteadyState { multiplicity, basis }) => {
                assert!(multiplicity >= 2);
                assert_eq!(basis.len(), multiplicity);
            }
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn zero_intensity_is_an_error() {
        let e = Engine::from_config(&cfg(0.0, 0.5)).unwrap();
        assert!(matches!(e.g2("a", "a", &[0.0, 1.0]), Err(Error::ZeroIntensity(_))));
        let raw = e.two_time("a", "a", &[0.0, 1.0]).unwrap();
        assert!(raw.iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn cavity_decay() {
        let c = cfg(0.0, 0.0);
        let m = Model::new(&c).unwrap();
        let d = m.space.dim();
        let rho0 = DensityMatrix::pure(d, m.space.index(&[1, 0, 0]));
        let ts = [0.0, 0.3, 1.0];
        let tr = evolve(&m.liouvillian(), &rho0, &ts).unwrap();
        let n = m.space.number(Mode::A).unwrap();
        for (t, s) in ts.iter().zip(&tr.states) {
            assert!((s.expect(&n).re - (-2.0 * t).exp()).abs() < 1e-9);
        }
        assert!(tr.trace_drift < 1e-9);
    }
}
