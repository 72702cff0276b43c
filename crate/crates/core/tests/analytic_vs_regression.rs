use ring_cqed::analytic::{g2_indep_2level, g2_indep_3level, single_emitter_engine, IndepEnsemble, Pair};
use ring_cqed::badcavity::effective_couplings;
use ring_cqed::model::{CavityParams, EmitterParams, SystemConfig};

fn config(three_level: bool) -> SystemConfig {
    let kappa = 1.0;
    let mut em = vec![
        EmitterParams::two_level(0.05, 0.03, 0.1, 0.002, 0.004, 0.001),
        EmitterParams::two_level(-0.08, 0.025, 0.9, 0.003, 0.002, 0.0015),
        EmitterParams::two_level(0.02, 0.035, 2.1, 0.001, 0.003, 0.0008),
    ];
    if three_level {
        for e in &mut em {
            e.gamma_e = 0.0007;
            e.gamma_s = 0.0004;
        }
    }
    SystemConfig::new(em, CavityParams::with_kappa(kappa, 0.0), 1)
}

fn check(three_level: bool) {
    let model = effective_couplings(&config(three_level)).unwrap().without_cross_terms();
    let engine = model.engine().unwrap();
    let ens = IndepEnsemble::from_effective(&model);
    let taus: Vec<f64> = (0..60).map(|k| k as f64 * 15.0).collect();
    for (pair, (x, y)) in [(Pair::AA, ("a", "a")), (Pair::AB, ("a", "b")), (Pair::BA, ("b", "a"))] {
        let num = engine.g2_positive(x, y, &taus).unwrap();
        for (t, v) in taus.iter().zip(&num) {
            let a = if three_level {
                g2_indep_3level(&ens, pair, *t).unwrap().value
            } else {
                g2_indep_2level(&ens, pair, *t).unwrap()
            };
            assert!((a - v).abs() < 1e-6, "{pair:?} τ={t}: analytic {a} vs regression {v}");
        }
    }
}

#[test]
fn two_level_closed_form_matches_uncoupled_effective_model() {
    check(false);
}

#[test]
fn three_level_closed_form_matches_uncoupled_effective_model() {
    check(true);
}

#[test]
fn single_three_level_emitter_matches_regression() {
    let mut e = EmitterParams::two_level(0.3, 0.0, 0.0, 1.0, 0.5, 0.4);
    e.gamma_e = 0.3;
    e.gamma_s = 0.05;
    let engine = single_emitter_engine(&e).unwrap();
    let ens = IndepEnsemble::from_rates(&[e.clone()], &[1.0]);
    let taus: Vec<f64> = (0..80).map(|k| k as f64 * 0.5).collect();
    let num = engine.g2_positive("s", "s", &taus).unwrap();
    // the closed form uses the total decay; here all of it is intrinsic
    let mut ens = ens;
    ens.emitters[0].gamma = e.gamma;
    for (t, v) in taus.iter().zip(&num) {
        let a = g2_indep_3level(&ens, Pair::AA, *t).unwrap().value;
        assert!((a - v).abs() < 1e-6, "τ={t}: {a} vs {v}");
    }
}

#[test]
fn diffusion_average_matches_monte_carlo() {
    use rand::SeedableRng;
    use ring_cqed::analytic::{g2_diffused, g2_diffused_mc, IndepEmitter};
    let e = |mu: f64, s: f64, phi: f64, w: f64| IndepEmitter {
        intensity: w,
        delta: mu,
        phi,
        gamma: 1.0,
        gamma_deph: 0.3,
        gamma_ex: 0.2,
        gamma_e: 0.1,
        gamma_s: 0.02,
        mu,
        s,
    };
    let ens = IndepEnsemble {
        emitters: vec![e(0.5, 2.0, 0.2, 1.0), e(-1.0, 1.0, 1.1, 0.7), e(2.0, 3.0, 2.5, 1.3)],
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for pair in [Pair::AA, Pair::AB] {
        for tau in [0.0, 0.2, 0.5, 1.0, 3.0] {
            let exact = g2_diffused(&ens, pair, tau).unwrap().value;
            let (mean, sem) = g2_diffused_mc(&ens, pair, tau, 10_000, &mut rng).unwrap();
            assert!((exact - mean).abs() < 3.0 * sem.max(1e-12), "{pair:?} τ={tau}: {exact} vs {mean} ± {sem}");
        }
    }
}
