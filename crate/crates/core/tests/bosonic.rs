use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ring_cqed::bosonic::{fock_reference, gaussian_g2, gaussian_steady_state, qr_reduce, spin_vs_boson_compare, QuadraticModel};
use ring_cqed::correlation::chirality_metric;
use ring_cqed::model::{CavityParams, EmitterParams, SystemConfig};
use std::f64::consts::PI;

fn random_model(rng: &mut ChaCha8Rng, n: usize, equal_detuning: bool) -> QuadraticModel {
    let gs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.4)).collect();
    let phis: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let delta = rng.gen_range(-0.5..0.5);
    // no backscattering: a direct a-b link would close the coupling chain into a loop
    let mut m = QuadraticModel::uniform(&gs, &phis, delta, 0.0, 1.0, rng.gen_range(0.05..0.3), 0.0);
    // the theorem needs uniform rates: Q mixes the emitter modes
    let pump = 0.4 * m.decay[0] * rng.gen_range(0.1..1.0);
    m.pump = vec![pump; n];
    if !equal_detuning {
        m.deltas = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    }
    m
}

fn grid() -> Vec<f64> {
    (0..40).map(|k| k as f64 * 0.5).collect()
}

#[test]
fn equal_detuning_models_have_symmetric_cross_correlation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let m = random_model(&mut rng, 1 + k % 4, true);
        let c = gaussian_g2(&m, ("a", "b"), &grid()).unwrap();
        worst = worst.max(chirality_metric(&c).unwrap());
    }
    assert!(worst < 1e-8, "worst asymmetry {worst:e}");
}

#[test]
fn unequal_detunings_break_the_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = random_model(&mut rng, 3, false);
    let c = gaussian_g2(&m, ("a", "b"), &grid()).unwrap();
    assert!(chirality_metric(&c).unwrap() > 1e-6);
}

#[test]
fn gaussian_matches_truncated_fock_at_weak_pump() {
    let mut m = QuadraticModel::uniform(&[0.3, 0.25, 0.2], &[0.2, 1.1, 2.5], 0.1, 0.15, 1.0, 0.2, 0.0);
    m.pump = vec![0.01; 3];
    let s = gaussian_steady_state(&m).unwrap();
    let fock = fock_reference(&m, 2).unwrap();
    for (k, label) in ["a", "b"].iter().enumerate() {
        let exact = fock.intensity(label).unwrap();
        let rel = (s.occupation(k) - exact).abs() / exact;
        assert!(rel < 0.01, "{label}: gaussian {} fock {exact}", s.occupation(k));
    }
}

#[test]
fn gaussian_zero_delay_bunching_matches_truncated_fock() {
    // two-photon states need headroom in every mode, hence cutoff 3
    let mut m = QuadraticModel::uniform(&[0.3, 0.2], &[0.2, 1.1], 0.1, 0.15, 1.0, 0.2, 0.0);
    m.pump = vec![0.005; 2];
    let fock = fock_reference(&m, 3).unwrap();
    let g = gaussian_g2(&m, ("a", "a"), &[0.0]).unwrap().values[0];
    let gf = fock.g2("a", "a", &[0.0]).unwrap().values[0];
    assert!((g - gf).abs() / gf < 0.02, "gaussian {g} fock {gf}");
}

#[test]
fn mirrored_chain_couplings_match_in_magnitude() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = random_model(&mut rng, 3, true);
    let red = qr_reduce(&m.g);
    for i in 0..2 {
        for j in 0..2 {
            let (p, q) = (red.primary.r[(i, j)].norm(), red.mirrored.r[(i, j)].norm());
            assert!((p - q).abs() < 1e-12, "R[{i},{j}] {p} vs {q}");
        }
    }
}

fn spin_config(gs: &[f64], phis: &[f64], deltas: &[f64], g_bs: f64) -> SystemConfig {
    SystemConfig::new(
        gs.iter()
            .zip(phis)
            .zip(deltas)
            .map(|((&g, &p), &d)| EmitterParams::two_level(d, g, p, 0.1, 0.0, 0.002))
            .collect(),
        CavityParams::with_kappa(1.0, g_bs),
        2,
    )
}

#[test]
fn spin_and_boson_agree_at_weak_pump() {
    let cfg = spin_config(&[0.1, 0.08], &[0.3, 1.2], &[0.05, -0.1], 0.1);
    let r = spin_vs_boson_compare(&cfg, &grid()).unwrap();
    for k in 0..2 {
        assert!((r.spin_intensities[k] - r.boson_intensities[k]).abs() / r.spin_intensities[k] < 0.05);
    }
    // g² itself differs: spins antibunch, the Gaussian analogue is thermal
    assert!(r.max_curve_deviation > 0.1, "{r:?}");
}

#[test]
fn emitter_nonlinearity_causes_chirality_bosons_do_not() {
    let cfg = spin_config(&[0.3, 0.2, 0.25], &[0.2, 1.5, 2.6], &[0.3; 3], 0.0);
    let mut cfg = cfg;
    for e in &mut cfg.emitters {
        e.gamma_ex = 0.05;
    }
    cfg.fock_cutoff = 2;
    let r = spin_vs_boson_compare(&cfg, &grid()).unwrap();
    assert!(r.boson_chirality < 1e-8);
    assert!(r.spin_chirality > 1e-4, "{r:?}");
}

#[test]
fn single_emitter_without_backscatter_is_achiral_in_both() {
    let r = spin_vs_boson_compare(&spin_config(&[0.2], &[0.7], &[0.1], 0.0), &grid()).unwrap();
    assert!(r.spin_chirality < 1e-6 && r.boson_chirality < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn lyapunov_solution_is_psd_and_accurate(seed in 0u64..10_000, n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, n, seed % 2 == 0);
        let s = gaussian_steady_state(&m).unwrap();
        prop_assert!(s.residual < 1e-10);
        let (vals, _) = ring_cqed::linalg::eigh(&s.normal).unwrap();
        prop_assert!(vals[0] > -1e-12);
    }
}
