//! Pulsed parametric (Kerr four-wave-mixing) pair generation with an
//! undepleted mean-field pump, and signal/idler/emitter coincidence analysis.
//!
//! The pump mode is never quantized. Its intracavity mean field drives the
//! two-mode-squeezing term `Ω(t) a^† a_{-2}^† + h.c.` with
//! `Ω(t) = g_Kerr ⟨a_{-1}⟩(t)²`.

use crate::dynamics::{dot, steady_state_in, DensityMatrix};
use crate::error::{Error, Result};
use crate::fitting::optimize::{levenberg_marquardt, Bounds, LmOptions};
use crate::linalg::{CsrMatrix, I, ZERO};
use crate::model::{Model, SystemConfig};
use crate::ode::{integrate_with, Generator, OdeOptions};
use crate::space::{Mode, Operator};
use crate::superop::{Sector, Superoperator};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpShape {
    /// Samples are the waveguide input field `s_in(t)` (√photons/s).
    Input,
    /// Samples are the intracavity mean field `⟨a_{-1}⟩(t)` (√photons).
    Intracavity,
}

/// Uniformly sampled pump description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpPulse {
    pub shape: PumpShape,
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<C64>,
    pub rep_period: f64,
    /// Pump detuning `δ` from its cavity resonance.
    #[serde(default)]
    pub pump_detuning: f64,
    /// Pump-mode loaded linewidth `κ_p`.
    pub pump_kappa: f64,
    /// Pump-mode waveguide coupling `κ_C`.
    pub pump_kappa_c: f64,
}

impl PumpPulse {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.t0.is_finite() {
            return Err(Error::param("kerr.pump.dt", "must be positive"));
        }
        if self.samples.is_empty() || self.samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::param("kerr.pump.samples", "must be non-empty and finite"));
        }
        if !(self.rep_period > 0.0) {
            return Err(Error::param("kerr.pump.rep_period", "must be positive"));
        }
        if self.shape == PumpShape::Input && !(self.pump_kappa > 0.0 && self.pump_kappa_c >= 0.0) {
            return Err(Error::param("kerr.pump.pump_kappa", "must be positive"));
        }
        Ok(())
    }

    /// Gaussian input pulse with intensity FWHM `fwhm` centred at `center`,
    /// `peak` the peak input amplitude, sampled on `[0, t_end]` with step `dt`.
    #[allow(clippy::too_many_arguments)]
    pub fn gaussian_input(
        peak: f64,
        fwhm: f64,
        center: f64,
        t_end: f64,
        dt: f64,
        rep_period: f64,
        pump_kappa: f64,
        pump_kappa_c: f64,
    ) -> Self {
        // intensity FWHM → amplitude standard deviation
        let sigma = fwhm / (2.0 * (2.0f64.ln()).sqrt()) * std::f64::consts::SQRT_2;
        let n = (t_end / dt).round() as usize + 1;
        let samples = (0..n)
            .map(|k| {
                let t = k as f64 * dt - center;
                C64::new(peak * (-0.5 * (t / sigma).powi(2)).exp(), 0.0)
            })
            .collect();
        Self {
            shape: PumpShape::Input,
            t0: 0.0,
            dt,
            samples,
            rep_period,
            pump_detuning: 0.0,
            pump_kappa,
            pump_kappa_c,
        }
    }

    /// Energy-like integral `∫|s|² dt` of the samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.dt
    }

    /// Same pulse with all samples multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|s| *s *= factor);
        out
    }
}

/// Mean field `⟨a_{-1}⟩` on a uniform grid; zero outside it.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanField {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<C64>,
}

impl MeanField {
    pub fn at(&self, t: f64) -> C64 {
        let x = (t - self.t0) / self.dt;
        if x < 0.0 || x > (self.values.len() - 1) as f64 {
            return ZERO;
        }
        let k = (x.floor() as usize).min(self.values.len() - 1);
        if k + 1 >= self.values.len() {
            return self.values[k];
        }
        let w = x - k as f64;
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Integrates `d⟨a⟩/dt = (−iδ − κ_p/2)⟨a⟩ + √κ_C s_in(t)` with classical RK4
/// on the sample grid (input interpolated linearly at half steps). Direct
/// intracavity samples pass through unchanged.
pub fn pump_response(pulse: &PumpPulse) -> MeanField {
    if pulse.shape == PumpShape::Intracavity {
        return MeanField {
            t0: pulse.t0,
            dt: pulse.dt,
            values: pulse.samples.clone(),
        };
    }
    let lam = C64::new(-pulse.pump_kappa / 2.0, -pulse.pump_detuning);
    let drive = pulse.pump_kappa_c.sqrt();
    let h = pulse.dt;
    let s = &pulse.samples;
    let f = |a: C64, sin: C64| lam * a + sin * drive;
    let mut values = Vec::with_capacity(s.len());
    let mut a = ZERO;
    values.push(a);
    for k in 0..s.len() - 1 {
        let (s0, s1) = (s[k], s[k + 1]);
        let sm = (s0 + s1) * 0.5;
        let k1 = f(a, s0);
        let k2 = f(a + k1 * (h / 2.0), sm);
        let k3 = f(a + k2 * (h / 2.0), sm);
        let k4 = f(a + k3 * h, s1);
        a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        values.push(a);
    }
    MeanField {
        t0: pulse.t0,
        dt: pulse.dt,
        values,
    }
}

/// `−i[P, ·]` for an arbitrary (non-Hermitian) operator `P`.
fn commutator_superop(p: &Operator) -> CsrMatrix {
    let d = p.nrows();
    let mut trips = Vec::new();
    for (r, c, v) in p.triplets() {
        for k in 0..d {
            trips.push((r * d + k, c * d + k, -I * v));
            trips.push((k * d + c, k * d + r, I * v));
        }
    }
    CsrMatrix::from_triplets(d * d, d * d, trips)
}

/// Time-dependent Liouvillian `L(t) = L₀ + Ω(t) K + Ω*(t) K'`, restricted
/// to the stationary charge sector (the drive conserves `n_a − n_idler`).
#[derive(Clone, Debug)]
pub struct KerrLiouvillian {
    pub model: Model,
    pub sector: Sector,
    k: CsrMatrix,
    kd: CsrMatrix,
    pub field: MeanField,
    pub g_kerr: f64,
    pub flags: Vec<String>,
    norm: f64,
}

impl Generator for KerrLiouvillian {
    fn dim(&self) -> usize {
        self.sector.len()
    }

    fn apply(&self, t: f64, x: &[C64], out: &mut [C64]) {
        self.sector.matrix.matvec(x, out);
        let f = self.field.at(t);
        let omega = f * f * self.g_kerr;
        if omega != ZERO {
            let kx = self.k.apply(x);
            let kdx = self.kd.apply(x);
            let oc = omega.conj();
            for i in 0..out.len() {
                out[i] += omega * kx[i] + oc * kdx[i];
            }
        }
    }

    fn norm_estimate(&self) -> f64 {
        self.norm
    }
}

/// Builds the driven model. `include_b` keeps the counter-propagating mode.
pub fn build_kerr_liouvillian(config: &SystemConfig, include_b: bool) -> Result<KerrLiouvillian> {
    let kerr = config
        .kerr
        .as_ref()
        .ok_or_else(|| Error::param("kerr", "parametric drive parameters missing"))?;
    let modes: Vec<Mode> = if include_b {
        vec![Mode::A, Mode::B, Mode::Idler]
    } else {
        vec![Mode::A, Mode::Idler]
    };
    let model = Model::with_modes(config, &modes)?;
    let l0 = model.liouvillian();
    let a = model.annihilation(Mode::A)?;
    let i = model.annihilation(Mode::Idler)?;
    let pair = a.adjoint().matmul(&i.adjoint());
    let full_k = commutator_superop(&pair);
    let full_kd = commutator_superop(&pair.adjoint());
    let sector = l0.stationary_sector();
    let k = sector.restrict(&full_k);
    let kd = sector.restrict(&full_kd);
    let field = pump_response(&kerr.pump);
    let omega_max = kerr.g_kerr.abs() * field.peak().powi(2);
    let norm = sector.matrix.norm_inf() + 2.0 * omega_max * k.norm_inf().max(kd.norm_inf());
    Ok(KerrLiouvillian {
        model,
        sector,
        k,
        kd,
        field,
        g_kerr: kerr.g_kerr,
        flags: Vec::new(),
        norm,
    })
}

/// Coincidence-counting windows relative to the pulse arrival.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceWindows {
    pub fast: (f64, f64),
    pub slow: (f64, f64),
}

impl CoincidenceWindows {
    pub fn validate(&self, rep_period: f64) -> Result<()> {
        let ok = |w: (f64, f64)| w.0 >= 0.0 && w.1 > w.0 && w.1 <= rep_period;
        if !ok(self.fast) || !ok(self.slow) {
            return Err(Error::param("windows", "must be ordered and within the repetition period"));
        }
        if self.fast.1 > self.slow.0 && self.slow.1 > self.fast.0 {
            return Err(Error::param("windows", "fast and slow windows overlap"));
        }
        Ok(())
    }
}

/// States and channel fluxes over one repetition period.
#[derive(Clone, Debug)]
pub struct PulseRun {
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    /// Output photon flux `κ_C ⟨x^† x⟩` per channel label.
    pub fluxes: Vec<(String, Vec<f64>)>,
    /// Mean idler photons emitted per pulse (pair probability).
    pub pairs_per_pulse: f64,
    pub flags: Vec<String>,
}

impl PulseRun {
    pub fn flux(&self, label: &str) -> Result<&[f64]> {
        self.fluxes
            .iter()
            .find(|f| f.0 == label)
            .map(|f| f.1.as_slice())
            .ok_or_else(|| Error::UnknownChannel(label.into()))
    }

    /// Photons per pulse detected in `window` on `label`.
    pub fn singles(&self, label: &str, window: (f64, f64)) -> Result<f64> {
        let w = window_weights(&self.times, window);
        Ok(self.flux(label)?.iter().zip(&w).map(|(f, w)| f * w).sum())
    }
}

/// Trapezoid weights of the samples for `∫_window f(t) dt`, with linear
/// interpolation at the window edges.
pub fn window_weights(times: &[f64], window: (f64, f64)) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    for k in 0..times.len().saturating_sub(1) {
        let (a, b) = (times[k], times[k + 1]);
        let lo = a.max(window.0);
        let hi = b.min(window.1);
        if hi <= lo {
            continue;
        }
        let h = b - a;
        // ∫_lo^hi of the linear interpolant, split onto the two end samples
        let (u0, u1) = ((lo - a) / h, (hi - a) / h);
        let wb = 0.5 * (u1 * u1 - u0 * u0) * h;
        let wa = (u1 - u0) * h - wb;
        w[k] += wa;
        w[k + 1] += wb;
    }
    w
}

fn channel_ops(kl: &KerrLiouvillian) -> Result<Vec<(String, Operator)>> {
    kl.model
        .space
        .modes()
        .iter()
        .map(|&m| Ok((m.label().to_string(), kl.model.annihilation(m)?)))
        .collect()
}

impl KerrLiouvillian {
    /// Pre-pulse state: the steady state of the undriven model if unique,
    /// otherwise the vacuum.
    pub fn initial_state(&self) -> Vec<C64> {
        let d = self.sector.hilbert_dim();
        match steady_state_in(self.sector.clone()) {
            Ok(ss) => ss.vec,
            Err(_) => self.sector.from_dense(&DensityMatrix::pure(d, 0).data),
        }
    }

    fn detection_rate(&self) -> f64 {
        let c = &self.model.config.cavity;
        if c.kappa_c > 0.0 {
            c.kappa_c
        } else {
            c.kappa()
        }
    }

    /// Simulates one repetition period on `times` (sorted, starting at the
    /// beginning of the pulse window).
    pub fn run(&self, times: &[f64]) -> Result<PulseRun> {
        let v0 = self.initial_state();
        let mut states = vec![Vec::new(); times.len()];
        let opts = OdeOptions::default();
        integrate_with(self, times[0], &v0, times, &opts, |i, _, y| states[i] = y.to_vec())?;
        let rate = self.detection_rate();
        let mut fluxes = Vec::new();
        for (label, op) in channel_ops(self)? {
            let w = self.sector.weights(&op.adjoint().matmul(&op));
            fluxes.push((label, states.iter().map(|s| rate * dot(&w, s).re).collect::<Vec<_>>()));
        }
        let mut run = PulseRun {
            times: times.to_vec(),
            states,
            fluxes,
            pairs_per_pulse: 0.0,
            flags: self.flags.clone(),
        };
        let idler_total = run.singles("idler", (times[0], *times.last().unwrap()))?;
        run.pairs_per_pulse = idler_total / rate * self.model.config.cavity.kappa();
        if run.pairs_per_pulse > 0.2 {
            run.flags.push(format!(
                "truncation warning: {:.3} pairs per pulse at Fock cutoff {}",
                run.pairs_per_pulse,
                self.model.config.fock_cutoff
            ));
        }
        // population of the highest Fock level of any mode
        let cut = self.model.config.fock_cutoff;
        let d = self.sector.hilbert_dim();
        let space = &self.model.space;
        let nm = space.modes().len();
        let mut top: f64 = 0.0;
        for s in &run.states {
            let dense_diag = |i: usize| self.sector.position(i * d + i).map(|p| s[p].re).unwrap_or(0.0);
            for i in 0..d {
                if space.digits(i)[..nm].contains(&cut) {
                    top = top.max(dense_diag(i));
                }
            }
        }
        if top > 1e-2 {
            return Err(Error::Truncation(format!(
                "highest Fock level population {top:.3e} at cutoff {cut}"
            )));
        }
        Ok(run)
    }

    fn kernel(&self, run: &PulseRun, x: &Operator, y: &Operator) -> Result<Vec<Vec<f64>>> {
        let n = run.times.len();
        let rate = self.detection_rate();
        let wy = self.sector.weights(&y.adjoint().matmul(y));
        (0..n)
            .into_par_iter()
            .map(|i| {
                let v0 = self.sector.sandwich(x, &run.states[i]);
                let mut row = vec![0.0; n];
                let outs = &run.times[i..];
                integrate_with(self, run.times[i], &v0, outs, &OdeOptions::default(), |k, _, v| {
                    row[i + k] = rate * rate * dot(&wy, v).re
                })?;
                Ok(row)
            })
            .collect()
    }

    /// Flux–flux coincidence map `G²(t₁, t₂)` with `x` detected at `t₁` and
    /// `y` at `t₂`, on the run's time grid (row-major in `t₁`).
    pub fn pulsed_two_time(&self, run: &PulseRun, x: &str, y: &str) -> Result<CoincidenceMap> {
        let ops = channel_ops(self)?;
        let find = |l: &str| {
            ops.iter()
                .find(|o| o.0 == l)
                .map(|o| o.1.clone())
                .ok_or_else(|| Error::UnknownChannel(l.into()))
        };
        let (ox, oy) = (find(x)?, find(y)?);
        let kxy = self.kernel(run, &ox, &oy)?;
        let kyx = if x == y { kxy.clone() } else { self.kernel(run, &oy, &ox)? };
        let n = run.times.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = if j >= i { kxy[i][j] } else { kyx[j][i] };
            }
        }
        Ok(CoincidenceMap {
            times: run.times.clone(),
            x: x.into(),
            y: y.into(),
            values,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoincidenceMap {
    pub times: Vec<f64>,
    pub x: String,
    pub y: String,
    pub values: Vec<f64>,
}

impl CoincidenceMap {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.times.len() + j]
    }

    /// Same-pulse coincidences with `x` in `wx` and `y` in `wy`.
    pub fn integrate(&self, wx: (f64, f64), wy: (f64, f64)) -> f64 {
        let ax = window_weights(&self.times, wx);
        let ay = window_weights(&self.times, wy);
        let n = self.times.len();
        let mut s = 0.0;
        for i in 0..n {
            if ax[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                s += ax[i] * ay[j] * self.values[i * n + j];
            }
        }
        s
    }
}

/// Uncorrelated background (dark counts, residual pump leakage) as a fixed
/// rate per channel, in counts/s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub signal_rate: f64,
    pub idler_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CarReport {
    pub car_signal_idler: f64,
    pub car_atoms_idler: f64,
}

/// Coincidences-to-accidentals ratio of one window pairing:
/// `(C + S_x N_y + N_x S_y + N_x N_y) / ((S_x + N_x)(S_y + N_y))` where
/// `C` are true same-pulse coincidences, `S` per-pulse singles and `N`
/// per-pulse background counts. Accidentals are different-pulse coincidences.
pub fn car_value(coinc: f64, sx: f64, sy: f64, nx: f64, ny: f64) -> Result<f64> {
    let acc = (sx + nx) * (sy + ny);
    if !(acc > 0.0) {
        return Err(Error::Domain("zero accidentals; CAR undefined".into()));
    }
    Ok((coinc + sx * ny + nx * sy + nx * ny) / acc)
}

/// CAR for idler-fast × signal-fast and idler-fast × signal-slow ("atoms").
pub fn car(
    map_idler_signal: &CoincidenceMap,
    run: &PulseRun,
    windows: &CoincidenceWindows,
    background: &Background,
) -> Result<CarReport> {
    let len = |w: (f64, f64)| w.1 - w.0;
    let si = run.singles(&map_idler_signal.x, windows.fast)?;
    let ni = background.idler_rate * len(windows.fast);
    let pair = |w: (f64, f64)| -> Result<f64> {
        let c = map_idler_signal.integrate(windows.fast, w);
        let ss = run.singles(&map_idler_signal.y, w)?;
        car_value(c, si, ss, ni, background.signal_rate * len(w))
    };
    Ok(CarReport {
        car_signal_idler: pair(windows.fast)?,
        car_atoms_idler: pair(windows.slow)?,
    })
}

/// Default time grid for one pulse period: fine steps over the first 3 ns,
/// coarser afterwards.
pub fn default_time_grid(rep_period: f64, fine: f64, coarse: f64) -> Vec<f64> {
    let split = 3e-9f64.min(rep_period);
    let mut t = Vec::new();
    let n_fine = (split / fine).round() as usize;
    for k in 0..=n_fine {
        t.push(k as f64 * split / n_fine as f64);
    }
    let n_coarse = ((rep_period - split) / coarse).round() as usize;
    for k in 1..=n_coarse {
        t.push(split + k as f64 * (rep_period - split) / n_coarse as f64);
    }
    t
}

/// Rates of `|A e^{−k₁t/2} + B e^{−k₂t/2}|²` fitted to a flux trace after
/// `t_start`. The two decay channels interfere in amplitude, so the sum of
/// exponentials is fitted to `√flux`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoTimescales {
    pub fast: f64,
    pub slow: f64,
    pub fast_amplitude: f64,
    pub slow_amplitude: f64,
}

pub fn fit_two_timescales(times: &[f64], flux: &[f64], t_start: f64, t_end: f64, guess: (f64, f64)) -> Result<TwoTimescales> {
    let sel: Vec<usize> = (0..times.len()).filter(|&k| times[k] >= t_start && times[k] <= t_end).collect();
    if sel.len() < 8 {
        return Err(Error::Fit("too few samples in the fit window".into()));
    }
    let amp: Vec<f64> = flux.iter().map(|f| f.max(0.0).sqrt()).collect();
    let top = sel.iter().map(|&k| amp[k]).fold(0.0, f64::max);
    if !(top > 0.0) {
        return Err(Error::Fit("flux vanishes in the fit window".into()));
    }
    // rates in units of the fast guess keep the problem well scaled
    let unit = guess.0;
    let resid = |x: &[f64]| -> Result<Vec<f64>> {
        Ok(sel
            .iter()
            .map(|&k| {
                let t = (times[k] - t_start) * unit * 0.5;
                let m = (x[0] * (-x[1] * t).exp() + x[2] * (-x[3] * t).exp()).abs() * top;
                (m - amp[k]) / (amp[k] + 1e-4 * top)
            })
            .collect())
    };
    let bounds = Bounds::new(vec![-10.0, 0.1, -10.0, 1e-4], vec![10.0, 10.0, 10.0, 1.0])?;
    let x0 = [1.0, 1.0, -0.1, guess.1 / unit];
    let r = levenberg_marquardt(resid, &x0, &bounds, LmOptions::default())?;
    let (mut f, mut s) = ((r.x[1] * unit, r.x[0]), (r.x[3] * unit, r.x[2]));
    if f.0 < s.0 {
        std::mem::swap(&mut f, &mut s);
    }
    Ok(TwoTimescales {
        fast: f.0,
        slow: s.0,
        fast_amplitude: f.1 * top,
        slow_amplitude: s.1 * top,
    })
}

/// Kerr superoperator pieces exposed for oracle tests: `(L₀, K, K')` on the
/// full vectorized space.
pub fn kerr_superoperators(kl: &KerrLiouvillian) -> Result<(Superoperator, CsrMatrix, CsrMatrix)> {
    let l0 = kl.model.liouvillian();
    let a = kl.model.annihilation(Mode::A)?;
    let i = kl.model.annihilation(Mode::Idler)?;
    let p = a.adjoint().matmul(&i.adjoint());
    Ok((l0, commutator_superop(&p), commutator_superop(&p.adjoint())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse(shape: PumpShape, samples: Vec<C64>, dt: f64) -> PumpPulse {
        PumpPulse {
            shape,
            t0: 0.0,
            dt,
            samples,
            rep_period: 1.0,
            pump_detuning: 0.0,
            pump_kappa: 2.0,
            pump_kappa_c: 1.0,
        }
    }

    #[test]
    fn cw_input_reaches_steady_field() {
        let dt = 1e-3;
        let s = C64::new(0.7, 0.0);
        let mut p = pulse(PumpShape::Input, vec![s; 20001], dt);
        p.pump_detuning = 0.5;
        let mf = pump_response(&p);
        let want = s * 1.0f64.sqrt() / C64::new(1.0, 0.5);
        assert!((mf.values.last().unwrap() - want).norm() < 1e-8);
    }

    #[test]
    fn impulse_rings_down_at_half_kappa() {
        let dt = 1e-4;
        let mut samples = vec![ZERO; 30001];
        samples[0] = C64::new(1.0 / dt, 0.0);
        let mf = pump_response(&pulse(PumpShape::Input, samples, dt));
        let (a1, a2) = (mf.values[10000].norm(), mf.values[20000].norm());
        assert!(((a1 / a2).ln() - 1.0).abs() < 1e-6, "{}", (a1 / a2).ln());
    }

    #[test]
    fn direct_samples_pass_through() {
        let p = pulse(PumpShape::Intracavity, vec![C64::new(1.0, 2.0), C64::new(3.0, 0.0)], 0.5);
        let mf = pump_response(&p);
        assert_eq!(mf.values, p.samples);
        assert!((mf.at(0.25) - C64::new(2.0, 1.0)).norm() < 1e-15);
        assert_eq!(mf.at(2.0), ZERO);
    }

    #[test]
    fn window_weights_integrate_linear_functions() {
        let t: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let w = window_weights(&t, (0.15, 0.72));
        let s: f64 = w.iter().zip(&t).map(|(w, t)| w * t).sum();
        assert!((s - 0.5 * (0.72f64.powi(2) - 0.15f64.powi(2))).abs() < 1e-14);
    }

    #[test]
    fn car_of_uncorrelated_channels_is_one() {
        assert!((car_value(0.02, 0.1, 0.2, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((car_value(0.02, 0.1, 0.2, 0.3, 0.01).unwrap() - 1.0).abs() < 1e-15);
        assert!(car_value(0.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn windows_validation() {
        let w = CoincidenceWindows {
            fast: (0.0, 0.8e-9),
            slow: (1.8e-9, 20e-9),
        };
        assert!(w.validate(25e-9).is_ok());
        assert!(w.validate(10e-9).is_err());
        let bad = CoincidenceWindows {
            fast: (0.0, 2e-9),
            slow: (1.8e-9, 20e-9),
        };
        assert!(bad.validate(25e-9).is_err());
    }
}
