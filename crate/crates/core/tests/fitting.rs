use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use ring_cqed::analytic::FitForm;
use ring_cqed::fitting::*;
use std::f64::consts::PI;

const TP: f64 = 2.0 * PI;
const JITTER: f64 = 82e-12;

fn truth() -> FitForm {
    FitForm {
        n: 17.4,
        xi: 0.3,
        gamma: 2.2e8,
        gamma_deph: 2.5e8,
        gamma_ex: 0.3 * 2.2e8,
        gamma_e: 2e7,
        gamma_s: 1e7,
        s: TP * 1e9,
    }
}

/// 10 ps bins within ±1 ns, 100 ps bins out to ±10 ns.
fn delays() -> Vec<f64> {
    let mut t: Vec<f64> = (-100..=100).map(|k| k as f64 * 10e-12).collect();
    for k in 11..=100 {
        t.push(k as f64 * 100e-12);
        t.push(-(k as f64) * 100e-12);
    }
    t.sort_by(f64::total_cmp);
    t
}

fn noisy(y: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = Normal::new(0.0, sigma).unwrap();
    y.iter().map(|v| v + d.sample(rng)).collect()
}

fn synth(form: &FitForm, taus: &[f64], jitter: f64, rng: &mut ChaCha8Rng) -> (Series, Series) {
    let w = Some(vec![100.0; taus.len()]);
    let aa = noisy(&g2_model_curve(form, false, taus, jitter), 0.01, rng);
    let ab = noisy(&g2_model_curve(form, true, taus, jitter), 0.01, rng);
    (
        Series::new(taus.to_vec(), aa, w.clone()).unwrap(),
        Series::new(taus.to_vec(), ab, w).unwrap(),
    )
}

#[test]
fn g2_round_trip_recovers_n_and_xi() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = truth();
    let (aa, ab) = synth(&t, &delays(), JITTER, &mut rng);
    let r = fit_g2(&aa, Some(&ab), &FitProblem::g2_default(JITTER, t.gamma_s)).unwrap();
    let n = r.get("n").unwrap();
    let xi = r.get("xi").unwrap();
    assert!((n - t.n).abs() < 0.1 * t.n, "n = {n}");
    assert!((xi - t.xi).abs() < 0.1 * t.xi, "xi = {xi}");
    assert!(r.converged);
    assert!(r.flags.is_empty(), "{:?}", r.flags);
}

#[test]
fn xi_one_on_auto_only_data_predicts_cross_equal_to_auto() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let taus = delays();
    let (aa, _) = synth(&truth(), &taus, JITTER, &mut rng);
    let mut problem = FitProblem::g2_default(JITTER, 1e7);
    problem.free.retain(|p| p.name != "xi");
    problem.fixed.insert("xi".into(), 1.0);
    let r = fit_g2(&aa, None, &problem).unwrap();
    let p = |k: &str| r.get(k).unwrap();
    let form = FitForm {
        n: p("n"),
        xi: p("xi"),
        gamma: p("gamma"),
        gamma_deph: p("gamma_deph"),
        gamma_ex: p("gamma_ex"),
        gamma_e: p("gamma_e"),
        gamma_s: p("gamma_s"),
        s: p("s"),
    };
    let auto = g2_model_curve(&form, false, &taus, JITTER);
    let cross = g2_model_curve(&form, true, &taus, JITTER);
    assert_eq!(auto, cross);
    // the fit reproduces the auto curve to the noise level
    let rms = (auto.iter().zip(&aa.y).map(|(m, y)| (m - y).powi(2)).sum::<f64>() / taus.len() as f64).sqrt();
    assert!(rms < 0.0125, "rms {rms}");
}

#[test]
fn vanishing_jitter_matches_unconvolved_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (aa, ab) = synth(&truth(), &delays(), 0.0, &mut rng);
    let plain = fit_g2(&aa, Some(&ab), &FitProblem::g2_default(0.0, 1e7)).unwrap();
    let tiny = fit_g2(&aa, Some(&ab), &FitProblem::g2_default(1e-15, 1e7)).unwrap();
    for k in ["n", "xi", "gamma", "gamma_deph", "gamma_ex"] {
        let d = (plain.get(k).unwrap() - tiny.get(k).unwrap()).abs();
        let s = plain.stderr(k).unwrap();
        assert!(d < s, "{k}: shift {d} vs stderr {s}");
    }
}

#[test]
fn jitter_convolution_preserves_area() {
    let taus: Vec<f64> = (-2000..=2000).map(|k| k as f64 * 5e-12).collect();
    let area = |y: &[f64]| y.iter().map(|v| v - 1.0).sum::<f64>() * 5e-12;
    for (cross, xi) in [(false, 1.0), (true, 0.3), (true, 0.0)] {
        let form = FitForm { xi, ..truth() };
        let raw = g2_model_curve(&form, cross, &taus, 0.0);
        let conv = g2_model_curve(&form, cross, &taus, JITTER);
        let (a, b) = (area(&raw), area(&conv));
        assert!((a - b).abs() < 5e-3 * a.abs(), "areas {a} {b}");
        // and the curve is actually smoothed
        let dip = |y: &[f64]| y.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(dip(&conv) > dip(&raw));
    }
}

#[test]
fn round_trip_is_self_consistent_over_twenty_trials() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let taus = delays();
    let problem = FitProblem::g2_default(JITTER, 1e7);
    let (aa, ab) = synth(&truth(), &taus, JITTER, &mut rng);
    let first = fit_g2(&aa, Some(&ab), &problem).unwrap();
    let p = |k: &str| first.get(k).unwrap();
    let fitted = FitForm {
        n: p("n"),
        xi: p("xi"),
        gamma: p("gamma"),
        gamma_deph: p("gamma_deph"),
        gamma_ex: p("gamma_ex"),
        gamma_e: p("gamma_e"),
        gamma_s: p("gamma_s"),
        s: p("s"),
    };
    let mut within_two = 0;
    for _ in 0..20 {
        let (aa, ab) = synth(&fitted, &taus, JITTER, &mut rng);
        let r = fit_g2(&aa, Some(&ab), &problem).unwrap();
        for (k, v) in [("n", fitted.n), ("xi", fitted.xi)] {
            let z = (r.get(k).unwrap() - v).abs() / r.stderr(k).unwrap();
            assert!(z < 4.0, "{k}: z = {z}");
            if z < 2.0 {
                within_two += 1;
            }
        }
    }
    assert!(within_two >= 34, "{within_two}/40 within 2σ");
}

fn bs_setup() -> BackscatterSetup {
    BackscatterSetup {
        kappa: TP * 0.29,
        kappa_c: 0.0,
        gamma: TP * 0.065,
        delta: 0.0,
        pulse: DrivePulse {
            center: 3.0,
            fwhm: 1.0,
            amplitude: 1.0,
        },
    }
}

fn bs_times() -> Vec<f64> {
    (1..=150).map(|k| k as f64 * 0.1).collect()
}

#[test]
fn backscatter_phase_recovered() {
    let setup = bs_setup();
    let t = bs_times();
    let clean = backscatter_trace(&setup, &t, TP * 0.2, 0.35 * PI, TP * 0.05).unwrap();
    let peak = clean.iter().cloned().fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let y = noisy(&clean, 0.01 * peak, &mut rng);
    let fit = fit_backscatter(&Series::new(t, y, None).unwrap(), &setup, TP * 0.4, TP * 0.1).unwrap();
    assert!((fit.phi - 0.35 * PI).abs() < 0.02 * PI, "phi = {}π", fit.phi / PI);
    assert!((fit.g - TP * 0.2).abs() < 0.05 * TP * 0.2);
    assert!((fit.g_bs - TP * 0.05).abs() < 0.1 * TP * 0.05);
}

#[test]
fn backscatter_objective_is_pi_periodic_in_phase() {
    let setup = bs_setup();
    let t = bs_times();
    for phi in [0.1, 0.35 * PI, 2.0] {
        let a = backscatter_trace(&setup, &t, TP * 0.2, phi, TP * 0.05).unwrap();
        let b = backscatter_trace(&setup, &t, TP * 0.2, phi + PI, TP * 0.05).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}

#[test]
fn constructive_interference_phase() {
    // interference ∝ g_bs sin 2φ in this coupling convention
    let setup = bs_setup();
    let up = constructive_phase(&setup, TP * 0.2, TP * 0.05).unwrap();
    let down = constructive_phase(&setup, TP * 0.2, -TP * 0.05).unwrap();
    assert!((up - 0.25 * PI).abs() < 0.011 * PI, "{}π", up / PI);
    assert!((down - 0.75 * PI).abs() < 0.011 * PI, "{}π", down / PI);
}

#[test]
fn backscatter_without_coupling_is_flagged() {
    let setup = bs_setup();
    let t = bs_times();
    let y = backscatter_trace(&setup, &t, 0.0, 0.3, TP * 0.05).unwrap();
    let fit = fit_backscatter(&Series::new(t.clone(), y, None).unwrap(), &setup, TP * 0.4, TP * 0.1).unwrap();
    assert!(fit.report.flags.iter().any(|f| f.contains("unidentifiable")), "{:?}", fit.report.flags);
    let flat = Series::new(t.clone(), vec![0.0; t.len()], None).unwrap();
    assert!(fit_backscatter(&flat, &setup, TP * 0.4, TP * 0.1).is_err());
}

fn sc_setup(sigma: f64) -> StrongCouplingSetup {
    StrongCouplingSetup {
        kappa: TP * 0.289,
        gamma: TP * 0.065,
        diffusion_sigma: sigma,
        zfs: TP * 1.0,
        nodes: 32,
        initial_cavity: 0.0,
        t0_range: (-0.3, 0.3),
    }
}

#[test]
fn strong_coupling_g_recovered() {
    let setup = sc_setup(TP * 0.15);
    let t: Vec<f64> = (0..120).map(|k| k as f64 * 0.05).collect();
    let clean = strong_coupling_trace(&setup, &t, &[TP * 0.202, TP * 0.1, 1000.0, 5.0, 0.05]);
    let peak = clean.iter().cloned().fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let y = noisy(&clean, 0.01 * peak, &mut rng);
    let fit = fit_strong_coupling(&Series::new(t, y, None).unwrap(), &setup, TP * 0.6, (-TP * 0.6, TP * 0.6)).unwrap();
    assert!((fit.g - TP * 0.202).abs() < 0.05 * TP * 0.202, "g = {}", fit.g / TP);
}

/// Largest contrast `(max − min)/(max + min)` between a local minimum and
/// the following local maximum.
fn oscillation_visibility(y: &[f64]) -> f64 {
    let mut best = 0.0f64;
    let mut dip = None;
    for (k, w) in y.windows(3).enumerate() {
        if w[1] < w[0] && w[1] < w[2] {
            dip = Some(y[k + 1]);
        } else if w[1] > w[0] && w[1] > w[2] {
            if let Some(d) = dip.take() {
                best = best.max((w[1] - d) / (w[1] + d));
            }
        }
    }
    best
}

#[test]
fn diffusion_washes_out_rabi_oscillations() {
    // first few Rabi periods only; g = 2π·0.5
    let t: Vec<f64> = (0..150).map(|k| k as f64 * 0.02).collect();
    let p = [TP * 0.5, 0.0, 1.0, 0.0, 0.0];
    let vis = |sigma: f64, nodes: usize| {
        let setup = StrongCouplingSetup {
            zfs: 0.0,
            nodes,
            ..sc_setup(sigma)
        };
        oscillation_visibility(&strong_coupling_trace(&setup, &t, &p))
    };
    let v: Vec<f64> = [0.0, 0.25, 0.5, 1.0].iter().map(|&s| vis(TP * s, 32)).collect();
    assert!(v[0] > 0.99, "{v:?}");
    assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
    // σ ≫ g needs a denser quadrature to resolve the average
    let broad = vis(TP * 5.0, 1024);
    assert!(broad < 0.2 && broad < v[3], "{broad}");
}

#[test]
fn ring_down_fit_returns_vanishing_coupling() {
    let setup = StrongCouplingSetup {
        initial_cavity: 1.0,
        ..sc_setup(TP * 0.05)
    };
    let t: Vec<f64> = (0..120).map(|k| k as f64 * 0.05).collect();
    let y = strong_coupling_trace(&setup, &t, &[0.0, 0.0, 500.0, 2.0, 0.0]);
    let fit = fit_strong_coupling(&Series::new(t, y, None).unwrap(), &setup, TP * 0.6, (-TP * 0.05, TP * 0.05)).unwrap();
    assert!(fit.g < 0.02 * TP * 0.6, "g = {}", fit.g);
}

#[test]
fn hom_visibility_bound() {
    let g = hom_dephasing_bound(0.76, 122.0).unwrap();
    assert!((g - 38.5).abs() < 0.05);
    assert!(g <= 39.0);
}
