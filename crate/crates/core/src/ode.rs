//! Adaptive Dormand–Prince 5(4) integration of linear complex systems
//! `dy/dt = L(t) y`.

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, ZERO};
use num_complex::Complex64 as C64;

/// A (possibly time-dependent) linear generator.
pub trait Generator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, t: f64, x: &[C64], out: &mut [C64]);
    /// Rough operator-norm scale, used to pick the first step.
    fn norm_estimate(&self) -> f64;
}

impl Generator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, _t: f64, x: &[C64], out: &mut [C64]) {
        self.matvec(x, out);
    }
    fn norm_estimate(&self) -> f64 {
        self.norm_inf()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    /// Absolute tolerance, relative to the largest entry of the initial state.
    pub atol: f64,
    pub max_steps: usize,
    /// Smallest admissible step relative to the integration span.
    pub min_step_rel: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-13,
            max_steps: 50_000_000,
            min_step_rel: 1e-15,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combo(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = ZERO;
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates from `t0` and calls `observe(index, t, y)` at every requested
/// output time (which must be sorted and `>= t0`). Steps are clipped to hit
/// output times exactly.
pub fn integrate_with<G, F>(
    gen: &G,
    t0: f64,
    y0: &[C64],
    outputs: &[f64],
    opts: &OdeOptions,
    mut observe: F,
) -> Result<()>
where
    G: Generator + ?Sized,
    F: FnMut(usize, f64, &[C64]),
{
    let n = gen.dim();
    assert_eq!(y0.len(), n);
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.first().is_some_and(|&t| t < t0) {
        return Err(Error::Domain("output times must be sorted and >= t0".into()));
    }
    let t_end = match outputs.last() {
        Some(&t) => t,
        None => return Ok(()),
    };
    let scale = y0.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let atol = opts.atol * scale.max(f64::MIN_POSITIVE);
    let span = (t_end - t0).abs().max(f64::MIN_POSITIVE);
    let h_min = opts.min_step_rel * span;

    let mut y = y0.to_vec();
    let mut t = t0;
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= t0 {
        observe(next_out, t0, &y);
        next_out += 1;
    }
    if next_out == outputs.len() {
        return Ok(());
    }
    if scale == 0.0 {
        while next_out < outputs.len() {
            observe(next_out, outputs[next_out], &y);
            next_out += 1;
        }
        return Ok(());
    }

    let mut k1 = vec![ZERO; n];
    let mut k2 = vec![ZERO; n];
    let mut k3 = vec![ZERO; n];
    let mut k4 = vec![ZERO; n];
    let mut k5 = vec![ZERO; n];
    let mut k6 = vec![ZERO; n];
    let mut k7 = vec![ZERO; n];
    let mut tmp = vec![ZERO; n];
    let mut y_new = vec![ZERO; n];

    gen.apply(t, &y, &mut k1);
    let norm = gen.norm_estimate().max(1.0 / span);
    let mut h = (0.01 / norm).min(span);
    let mut steps = 0usize;
    let mut err_prev = 1e-4f64;

    while next_out < outputs.len() {
        let target = outputs[next_out];
        let mut clipped = false;
        let mut h_try = h;
        if t + h_try >= target {
            h_try = target - t;
            clipped = true;
        }
        if h_try < h_min {
            if clipped {
                // Output lies within rounding distance of the current time.
                observe(next_out, target, &y);
                next_out += 1;
                continue;
            }
            return Err(Error::Stiffness { t });
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Stiffness { t });
        }

        combo(&mut tmp, &y, h_try, &[(A21, &k1)]);
        gen.apply(t + C2 * h_try, &tmp, &mut k2);
        combo(&mut tmp, &y, h_try, &[(A31, &k1), (A32, &k2)]);
        gen.apply(t + C3 * h_try, &tmp, &mut k3);
        combo(&mut tmp, &y, h_try, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        gen.apply(t + C4 * h_try, &tmp, &mut k4);
        combo(&mut tmp, &y, h_try, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        gen.apply(t + C5 * h_try, &tmp, &mut k5);
        combo(
            &mut tmp,
            &y,
            h_try,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        gen.apply(t + h_try, &tmp, &mut k6);
        combo(
            &mut y_new,
            &y,
            h_try,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        gen.apply(t + h_try, &y_new, &mut k7);

        let mut err_sq = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * h_try;
            let sc = atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err_sq += (e.norm() / sc).powi(2);
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            t = if clipped { target } else { t + h_try };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            // PI step-size controller.
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            let fac = fac.clamp(0.2, 5.0);
            if !clipped {
                h = h_try * fac;
            } else {
                h = h.max(h_try * fac);
            }
            err_prev = err.max(1e-4);
            while next_out < outputs.len() && outputs[next_out] <= t {
                observe(next_out, outputs[next_out], &y);
                next_out += 1;
            }
        } else {
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h = h_try * fac;
        }
    }
    Ok(())
}

/// Collects the states at the requested output times.
pub fn integrate<G: Generator + ?Sized>(
    gen: &G,
    t0: f64,
    y0: &[C64],
    outputs: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<Vec<C64>>> {
    let mut out = vec![Vec::new(); outputs.len()];
    integrate_with(gen, t0, y0, outputs, opts, |i, _, y| out[i] = y.to_vec())?;
    Ok(out)
}
