//! Canned parameter sets for the figure recipes.

use crate::config::{MHZ, NS};
use crate::kerr::{Background, CoincidenceWindows, PumpPulse};
use crate::model::{CavityParams, EmitterParams, KerrParams, SystemConfig};
use std::f64::consts::PI;

/// Coupling-phase sets with ξ ≈ 0.6, 0.3, 0.06.
pub const FIG3_PHASES: [[f64; 4]; 3] = [
    [0.0, 0.1 * PI, 0.2 * PI, 0.3 * PI],
    [0.0, 0.15 * PI, 0.3 * PI, 0.45 * PI],
    [0.0, 0.2 * PI, 0.4 * PI, 0.6 * PI],
];

/// Emitter detunings for the phase-disorder study. Resonant emitters would
/// radiate collectively; spreading them over a few linewidths makes them
/// effectively uncorrelated.
pub const FIG3_DETUNINGS_MHZ: [f64; 4] = [-600.0, -200.0, 200.0, 600.0];

pub fn fig3(phases: &[f64; 4]) -> SystemConfig {
    let emitters = phases
        .iter()
        .zip(FIG3_DETUNINGS_MHZ)
        .map(|(&phi, d)| EmitterParams::two_level(d * MHZ, 150.0 * MHZ, phi, 15.0 * MHZ, 40.0 * MHZ, 4.5 * MHZ))
        .collect();
    SystemConfig::new(emitters, CavityParams::with_kappa(300.0 * MHZ, 0.0), 2)
}

/// Single emitter with back-scattering (rates in units of κ).
pub fn fig4a() -> SystemConfig {
    SystemConfig::new(
        vec![EmitterParams::two_level(0.0, 0.3, PI / 4.0, 0.2, 0.1, 0.1)],
        CavityParams::with_kappa(1.0, 0.5),
        3,
    )
}

/// Four spectrally and phase-disordered emitters for the cavity sweep.
pub fn fig4e() -> SystemConfig {
    let e = |delta: f64, g: f64, phi: f64| EmitterParams::two_level(delta, g, phi, 0.05, 0.05, 0.05);
    SystemConfig::new(
        vec![
            e(-1.2, 0.25, 0.1 * PI),
            e(-0.3, 0.2, 0.65 * PI),
            e(0.5, 0.3, 1.3 * PI),
            e(1.4, 0.22, 1.75 * PI),
        ],
        CavityParams::with_kappa(1.0, 0.3),
        1,
    )
}

pub fn fig4e_offsets() -> Vec<f64> {
    (0..=40).map(|k| -2.0 + 0.1 * k as f64).collect()
}

/// Loaded linewidth for Q = 3.7·10⁵ at 327 THz.
pub fn kerr_kappa() -> f64 {
    2.0 * PI * 327e12 / 3.7e5
}

/// Bare emitter decay and target total emitter decay (4.6 ns lifetime).
pub const FIG5_GAMMA: f64 = 1e8;
pub const FIG5_LIFETIME: f64 = 4.6 * NS;

/// One emitter on the signal mode under a 50 ps pump pulse, ≈ 0.01 pairs
/// per pulse.
pub fn fig5e() -> SystemConfig {
    let kappa = kerr_kappa();
    let purcell = 1.0 / FIG5_LIFETIME - FIG5_GAMMA;
    // the signal mode alone sees g/√2, so Γ_P = 2g²/κ on resonance
    let g = (purcell * kappa / 2.0).sqrt();
    let pump = PumpPulse::gaussian_input(5.5e9, 0.05 * NS, 0.15 * NS, 0.5 * NS, 1e-12, 25.0 * NS, kappa, kappa / 2.0);
    let mut cfg = SystemConfig::new(
        vec![EmitterParams::two_level(0.0, g, 0.0, FIG5_GAMMA, 0.0, 0.0)],
        CavityParams::with_kappa(kappa, 0.0),
        3,
    );
    cfg.kerr = Some(KerrParams {
        g_kerr: 1.0,
        omega_idler: 0.0,
        pump,
    });
    cfg
}

pub const FIG5_WINDOWS: CoincidenceWindows = CoincidenceWindows {
    fast: (0.0, 0.8 * NS),
    slow: (1.8 * NS, 20.0 * NS),
};

/// Dark-count level (counts/s) on both detectors.
pub const FIG5_BACKGROUND: Background = Background {
    signal_rate: 1e4,
    idler_rate: 1e4,
};
