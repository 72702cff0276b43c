//! Box-constrained Levenberg–Marquardt and Nelder–Mead.

use crate::error::{Error, Result};
use faer::prelude::*;
use faer::Mat;

#[derive(Clone, Debug)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Fit("bounds of different length".into()));
        }
        for (k, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::Fit(format!("parameter {k}: bounds must be finite with lower < upper")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (k, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[k], self.upper[k]);
        }
    }

    fn width(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LmOptions {
    pub max_iter: usize,
    pub ftol: f64,
    pub xtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            ftol: 1e-12,
            xtol: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LsqResult {
    pub x: Vec<f64>,
    /// `½ Σ r²`.
    pub cost: f64,
    pub residuals: Vec<f64>,
    /// Row-major `m × p` Jacobian at `x`.
    pub jacobian: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Typical magnitude of each parameter, used to compare sensitivities.
    pub scale: Vec<f64>,
}

impl LsqResult {
    /// `s² (JᵀJ)⁻¹` with `s² = Σr² / (m − p)`; `None` if singular.
    pub fn covariance(&self) -> Option<Vec<Vec<f64>>> {
        let p = self.x.len();
        let m = self.residuals.len();
        let jtj = normal_matrix(&self.jacobian, p);
        let inv = invert(&jtj)?;
        let s2 = 2.0 * self.cost / (m.saturating_sub(p).max(1)) as f64;
        Some(inv.into_iter().map(|row| row.into_iter().map(|v| v * s2).collect()).collect())
    }

    /// Parameters whose scaled Jacobian column is negligible.
    pub fn flat_directions(&self) -> Vec<usize> {
        let p = self.x.len();
        let norms: Vec<f64> = (0..p)
            .map(|k| self.scale[k] * self.jacobian.iter().map(|r| r[k] * r[k]).sum::<f64>().sqrt())
            .collect();
        let max = norms.iter().cloned().fold(0.0, f64::max);
        (0..p).filter(|&k| norms[k] <= 1e-8 * max || max == 0.0).collect()
    }
}

fn normal_matrix(jac: &[Vec<f64>], p: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; p]; p];
    for row in jac {
        for i in 0..p {
            if row[i] == 0.0 {
                continue;
            }
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    a
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let p = a.len();
    let m = Mat::from_fn(p, p, |i, j| a[i][j]);
    let inv = m.partial_piv_lu().solve(Mat::<f64>::identity(p, p));
    let out: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| inv[(i, j)]).collect()).collect();
    out.iter().flatten().all(|v| v.is_finite()).then_some(out)
}

fn solve_small(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let p = a.len();
    let m = Mat::from_fn(p, p, |i, j| a[i][j]);
    let rhs = Mat::from_fn(p, 1, |i, _| b[i]);
    let x = m.partial_piv_lu().solve(&rhs);
    let out: Vec<f64> = (0..p).map(|i| x[(i, 0)]).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Forward-difference Jacobian, stepping inward at the upper bound.
fn jacobian<F>(f: &F, x: &[f64], r0: &[f64], bounds: &Bounds) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let p = x.len();
    let mut jac = vec![vec![0.0; p]; r0.len()];
    for k in 0..p {
        let mut h = 1e-7 * x[k].abs().max(1e-6 * bounds.width(k));
        if x[k] + h > bounds.upper[k] {
            h = -h;
        }
        let mut xh = x.to_vec();
        xh[k] += h;
        let rh = f(&xh)?;
        for (i, row) in jac.iter_mut().enumerate() {
            row[k] = (rh[i] - r0[i]) / h;
        }
    }
    Ok(jac)
}

/// Minimizes `½‖r(x)‖²` within box bounds (projected Levenberg–Marquardt
/// with Marquardt diagonal scaling).
pub fn levenberg_marquardt<F>(f: F, x0: &[f64], bounds: &Bounds, opts: LmOptions) -> Result<LsqResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let p = x0.len();
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let mut r = f(&x)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite residuals at the initial point".into()));
    }
    let mut cost = half_sq(&r);
    let mut jac = jacobian(&f, &x, &r, bounds)?;
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let a = normal_matrix(&jac, p);
        let g: Vec<f64> = (0..p).map(|k| jac.iter().zip(&r).map(|(row, ri)| row[k] * ri).sum()).collect();
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = a.clone();
            for k in 0..p {
                damped[k][k] += lambda * a[k][k].max(1e-300);
            }
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            let Some(step) = solve_small(&damped, &neg) else {
                lambda *= 10.0;
                continue;
            };
            let mut xn: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            bounds.clamp(&mut xn);
            let rn = match f(&xn) {
                Ok(rn) if rn.iter().all(|v| v.is_finite()) => rn,
                _ => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let cn = half_sq(&rn);
            if cn < cost {
                let dx = xn
                    .iter()
                    .zip(&x)
                    .enumerate()
                    .map(|(k, (a, b))| (a - b).abs() / (b.abs() + 1e-12 * bounds.width(k)))
                    .fold(0.0, f64::max);
                let df = (cost - cn) / cost.max(f64::MIN_POSITIVE);
                x = xn;
                r = rn;
                cost = cn;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if df < opts.ftol || dx < opts.xtol {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break;
            }
        }
        jac = jacobian(&f, &x, &r, bounds)?;
        if !improved {
            // no descent direction left within the damping range
            converged = true;
        }
        if converged || cost == 0.0 {
            converged = true;
            break;
        }
    }
    let scale = (0..p).map(|k| x[k].abs().max(1e-6 * bounds.width(k))).collect();
    Ok(LsqResult {
        x,
        cost,
        residuals: r,
        jacobian: jac,
        iterations,
        converged,
        scale,
    })
}

#[derive(Clone, Debug)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Derivative-free Nelder–Mead simplex search; points are clamped into the
/// bounds.
pub fn nelder_mead<F>(f: F, x0: &[f64], bounds: &Bounds, max_iter: usize, tol: f64) -> NmResult
where
    F: Fn(&[f64]) -> f64,
{
    let p = x0.len();
    let eval = |x: &mut Vec<f64>| {
        bounds.clamp(x);
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p + 1);
    let mut start = x0.to_vec();
    let v0 = eval(&mut start);
    simplex.push((start.clone(), v0));
    for k in 0..p {
        let mut x = start.clone();
        let step = 0.05 * bounds.width(k);
        x[k] = if x[k] + step <= bounds.upper[k] { x[k] + step } else { x[k] - step };
        let v = eval(&mut x);
        simplex.push((x, v));
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[p].1);
        if (worst - best).abs() <= tol * (best.abs() + tol) {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..p).map(|k| simplex[..p].iter().map(|s| s.0[k]).sum::<f64>() / p as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[p].0).map(|(c, w)| c + t * (w - c)).collect()
        };
        let mut xr = along(-1.0);
        let fr = eval(&mut xr);
        if fr < simplex[0].1 {
            let mut xe = along(-2.0);
            let fe = eval(&mut xe);
            simplex[p] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[p - 1].1 {
            simplex[p] = (xr, fr);
        } else {
            let mut xc = if fr < worst { along(-0.5) } else { along(0.5) };
            let fc = eval(&mut xc);
            if fc < worst.min(fr) {
                simplex[p] = (xc, fc);
            } else {
                let b = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let mut x: Vec<f64> = b.iter().zip(&s.0).map(|(bb, xx)| bb + 0.5 * (xx - bb)).collect();
                    let v = eval(&mut x);
                    *s = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    NmResult {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        iterations,
        converged,
    }
}

/// Gauss–Hermite nodes and weights for `∫ e^{−t²} f(t) dt` (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jac = Mat::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jac.self_adjoint_eigen(faer::Side::Lower).expect("symmetric tridiagonal eigenproblem");
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let nodes: Vec<f64> = (0..n).map(|i| eig.S()[i]).collect();
    let weights = (0..n).map(|i| sqrt_pi * eig.U()[(0, i)].powi(2)).collect();
    (nodes, weights)
}
