use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ring_cqed::badcavity::*;
use ring_cqed::correlation::linear_grid;
use ring_cqed::dynamics::Engine;
use ring_cqed::model::{CavityParams, EmitterParams, SystemConfig};
use ring_cqed::C64;
use std::f64::consts::PI;

fn random_config(rng: &mut ChaCha8Rng, g_bs: f64) -> SystemConfig {
    let n = rng.gen_range(1..=4);
    let emitters = (0..n)
        .map(|_| {
            EmitterParams::two_level(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.01..0.3),
                rng.gen_range(0.0..2.0 * PI),
                0.01,
                0.0,
                0.001,
            )
        })
        .collect();
    let mut cavity = CavityParams::with_kappa(rng.gen_range(0.5..2.0), g_bs);
    cavity.detuning_cav = rng.gen_range(-0.5..0.5);
    SystemConfig::new(emitters, cavity, 1)
}

#[test]
fn closed_forms_hold_in_the_resonance_gauge() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let cfg = random_config(&mut rng, 0.0);
        let m = effective_couplings(&cfg).unwrap();
        let (j, gam) = closed_form_gauged(&cfg);
        let th = closed_form_thetas(&cfg);
        let n = cfg.n();
        let scale = m.gamma.norm_max().max(m.j.norm_max());
        for a in 0..n {
            for b in 0..n {
                // Γ is stored for the ordering σ_m ρ σ_n†; the closed forms
                // refer to its transpose
                let u = C64::from_polar(1.0, th[b] - th[a]);
                assert!((m.gamma[(b, a)] * u - gam[(a, b)]).norm() < 1e-10 * scale);
                assert!((m.j[(a, b)] * u - j[(a, b)]).norm() < 1e-10 * scale);
                let da = cfg.emitters[a].delta - cfg.cavity.detuning_cav;
                let db = cfg.emitters[b].delta - cfg.cavity.detuning_cav;
                let direct = m.gamma[(a, b)].conj() * ((da + db) / (2.0 * cfg.cavity.kappa()));
                assert!((m.j[(a, b)] - direct).norm() < 1e-10 * scale);
            }
        }
    }
}

#[test]
fn gamma_has_rank_at_most_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..50 {
        let g_bs = if k % 2 == 0 { 0.0 } else { rng.gen_range(0.0..1.0) };
        let cfg = random_config(&mut rng, g_bs);
        let m = effective_couplings(&cfg).unwrap();
        let (vals, _) = m.gamma_spectrum().unwrap();
        let top = vals.iter().cloned().fold(0.0, f64::max);
        let small = vals.iter().filter(|v| **v > 1e-12 * top).count();
        assert!(small <= 2, "{vals:?}");
    }
}

#[test]
fn backscattering_with_detuning_disorder_leaves_a_loop_phase() {
    let kappa = 1.0;
    let e = |delta: f64, phi: f64| EmitterParams::two_level(delta, 0.01 * kappa, phi, 0.0, 0.0, 0.0);
    let cfg = |deltas: [f64; 3], g_bs: f64| {
        SystemConfig::new(
            vec![e(deltas[0], 0.0), e(deltas[1], 0.7), e(deltas[2], 1.9)],
            CavityParams::with_kappa(kappa, g_bs),
            1,
        )
    };
    let loop_sin = |c: &SystemConfig| effective_couplings(c).unwrap().loop_phase(0, 1, 2).sin().abs();
    assert!(loop_sin(&cfg([kappa, 0.5 * kappa, -0.3 * kappa], kappa / 2.0)) > 1e-3);
    // identical detunings: J is real in the standing-mode basis
    assert!(loop_sin(&cfg([kappa; 3], kappa / 2.0)) < 1e-12);
    // no back-scattering: the phase is a pure gauge
    assert!(loop_sin(&cfg([kappa, 0.5 * kappa, -0.3 * kappa], 0.0)) < 1e-12);
}

#[test]
fn uncorrelated_zero_delay_identities() {
    let e = |phi: f64| EmitterParams::two_level(0.0, 0.05, phi, 0.02, 0.01, 0.006);
    let cfg = |phis: &[f64]| {
        SystemConfig::new(
            phis.iter().map(|&p| e(p)).collect(),
            CavityParams::with_kappa(1.0, 0.0),
            1,
        )
    };
    let same = effective_couplings(&cfg(&[0.3; 4])).unwrap().without_cross_terms();
    let eng = same.engine().unwrap();
    let aa = eng.g2_positive("a", "a", &[0.0]).unwrap()[0];
    assert!((aa - 1.5).abs() < 2e-3, "{aa}");
    let spread = [0.0, 0.25 * PI, 0.5 * PI, 0.75 * PI];
    let eng = effective_couplings(&cfg(&spread)).unwrap().without_cross_terms().engine().unwrap();
    let ab = eng.g2_positive("a", "b", &[0.0]).unwrap()[0];
    assert!((ab - 0.5).abs() < 2e-3, "{ab}");
}

#[test]
fn single_emitter_channels_coincide() {
    let cfg = SystemConfig::new(
        vec![EmitterParams::two_level(0.3, 0.1, 0.4, 0.02, 0.01, 0.01)],
        CavityParams::with_kappa(1.0, 0.4),
        1,
    );
    let eng = effective_couplings(&cfg).unwrap().engine().unwrap();
    let taus = linear_grid(200.0, 40);
    let aa = eng.g2_positive("a", "a", &taus).unwrap();
    let ab = eng.g2_positive("a", "b", &taus).unwrap();
    let bb = eng.g2_positive("b", "b", &taus).unwrap();
    for k in 0..taus.len() {
        assert!((aa[k] - ab[k]).abs() < 1e-9 && (bb[k] - ab[k]).abs() < 1e-9);
    }
}

fn sup_error(eps: f64, d: u8) -> f64 {
    let cfg = comparison_config(1.0, eps, d, 2);
    let eff = effective_couplings(&cfg).unwrap();
    let taus = linear_grid(10.0 / eff.purcell[0], 60);
    let full = Engine::from_config(&cfg).unwrap().g2_positive("a", "a", &taus).unwrap();
    let approx = eff.engine().unwrap().g2_positive("a", "a", &taus).unwrap();
    full.iter().zip(&approx).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn elimination_converges_with_epsilon() {
    let errs: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&e| sup_error(e, 2)).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}
