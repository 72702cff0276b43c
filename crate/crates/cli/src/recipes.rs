//! Figure recipes: canned parameter sets, curves and a summary of the
//! quantities each figure is about.

use crate::commands::write_sweep;
use crate::output::Output;
use anyhow::{bail, Result};
use ring_cqed::analytic::{g2_indep_2level, xi_uniform, IndepEnsemble, Pair};
use ring_cqed::badcavity::{comparison_config, effective_couplings};
use ring_cqed::correlation::{chirality_metric, default_tau_grid, linear_grid, max_deviation, symmetric_taus};
use ring_cqed::dynamics::{default_grid, detuning_sweep, slowest_rate, Engine};
use ring_cqed::kerr::{build_kerr_liouvillian, car, default_time_grid, fit_two_timescales};
use ring_cqed::model::SystemConfig;
use ring_cqed::presets;
use ring_cqed::space::Mode;
use serde_json::json;

pub const RECIPES: [&str; 5] = ["fig3", "fig4a", "fig4e", "g2cmp", "fig5e"];

pub fn run(out: &mut Output, name: &str) -> Result<()> {
    match name {
        "fig3" => fig3(out),
        "fig4a" => fig4a(out),
        "fig4e" => fig4e(out),
        "g2cmp" => g2cmp(out),
        "fig5e" => fig5e(out),
        _ => bail!("unknown recipe '{name}' (available: {})", RECIPES.join(", ")),
    }
}

fn hash_configs(out: &mut Output, name: &str, configs: &[SystemConfig]) -> Result<()> {
    out.set_config(&serde_json::to_string(&(name, configs))?);
    Ok(())
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn relative_spread(v: &[f64]) -> f64 {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / lo
}

fn fig3(out: &mut Output) -> Result<()> {
    let configs: Vec<SystemConfig> = presets::FIG3_PHASES.iter().map(presets::fig3).collect();
    hash_configs(out, "fig3", &configs)?;
    let pos = default_tau_grid(20.0 / slowest_rate(&configs[0]), 200);
    let taus = symmetric_taus(&pos);
    let mut rows = Vec::new();
    let mut sets = Vec::new();
    let (mut xis, mut full_ab, mut eff_ab, mut full_aa, mut eff_aa) = (vec![], vec![], vec![], vec![], vec![]);
    for (k, (phases, cfg)) in presets::FIG3_PHASES.iter().zip(&configs).enumerate() {
        let xi = xi_uniform(phases);
        let eff = effective_couplings(cfg)?;
        let ens = IndepEnsemble::from_effective(&eff.without_cross_terms());
        let mut zero = serde_json::Map::new();
        for (model, engine) in [("full", Engine::from_config(cfg)?), ("effective", eff.engine()?)] {
            for (x, y) in [("a", "a"), ("a", "b")] {
                let c = engine.g2(x, y, &pos)?;
                let g0 = c.values[c.taus.len() / 2];
                zero.insert(format!("{model}_{x}{y}"), json!(g0));
                match (model, y) {
                    ("full", "a") => full_aa.push(g0),
                    ("full", _) => full_ab.push(g0),
                    (_, "a") => eff_aa.push(g0),
                    _ => eff_ab.push(g0),
                }
                for (t, v) in c.taus.iter().zip(&c.values) {
                    rows.push((vec![k.to_string(), model.to_string(), format!("{x}{y}")], vec![*t, *v]));
                }
            }
        }
        for (pair, label) in [(Pair::AA, "aa"), (Pair::AB, "ab")] {
            for &t in &taus {
                rows.push((vec![k.to_string(), "independent".into(), label.into()], vec![t, g2_indep_2level(&ens, pair, t)?]));
            }
            zero.insert(format!("independent_{label}"), json!(g2_indep_2level(&ens, pair, 0.0)?));
        }
        xis.push(xi);
        sets.push(json!({"set": k, "phases_over_pi": phases.map(|p| p / std::f64::consts::PI), "xi_phi": xi, "zero_delay": zero}));
    }
    out.write_rows("fig3_curves.csv", &["set", "model", "pair", "tau_s", "g2"], &rows)?;
    // sets are listed with decreasing ξ
    let rev = |v: &[f64]| v.iter().rev().cloned().collect::<Vec<_>>();
    out.write_json(
        "summary.json",
        &json!({
            "detunings_mhz": presets::FIG3_DETUNINGS_MHZ,
            "sets": sets,
            "full_ab_increasing_in_xi": strictly_increasing(&rev(&full_ab)),
            "effective_ab_increasing_in_xi": strictly_increasing(&rev(&eff_ab)),
            "full_aa_relative_spread": relative_spread(&full_aa),
            "effective_aa_relative_spread": relative_spread(&eff_aa),
        }),
    )
}

fn fig4a(out: &mut Output) -> Result<()> {
    let cfg = presets::fig4a();
    hash_configs(out, "fig4a", std::slice::from_ref(&cfg))?;
    let engine = Engine::from_config(&cfg)?;
    let pos = default_grid(&cfg);
    let curves = ["aa", "bb", "ab"]
        .iter()
        .map(|p| engine.g2(&p[..1], &p[1..], &pos))
        .collect::<ring_cqed::Result<Vec<_>>>()?;
    out.write_columns(
        "fig4a.csv",
        &["tau_over_kappa_inv".into(), "g2_aa".into(), "g2_bb".into(), "g2_ab".into()],
        &[curves[0].taus.clone(), curves[0].values.clone(), curves[1].values.clone(), curves[2].values.clone()],
    )?;
    out.write_json(
        "summary.json",
        &json!({
            "chirality": chirality_metric(&curves[2])?,
            "max_deviation_aa_bb": max_deviation(&curves[0], &curves[1]),
            "intensities": engine.channels.iter().map(|c| (c.label.clone(), c.intensity)).collect::<Vec<_>>(),
        }),
    )
}

fn fig4e(out: &mut Output) -> Result<()> {
    let cfg = presets::fig4e();
    hash_configs(out, "fig4e", std::slice::from_ref(&cfg))?;
    let pos = default_tau_grid(200.0, 80);
    let points = detuning_sweep(&cfg, &presets::fig4e_offsets(), (Mode::A, Mode::B), &pos)?;
    write_sweep(out, &points)?;
    let c: Vec<f64> = points.iter().map(|p| p.chirality.unwrap_or(f64::NAN)).collect();
    let turns = c.windows(3).filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0).count();
    out.write_json("summary.json", &json!({"chirality": c, "turning_points": turns, "non_monotonic": turns > 0}))
}

fn g2cmp(out: &mut Output) -> Result<()> {
    let eps = [0.2, 0.1, 0.05];
    let mut configs = Vec::new();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for d in [1u8, 2] {
        let mut errs = Vec::new();
        for &e in &eps {
            let cfg = comparison_config(1.0, e, d, 2);
            let eff = effective_couplings(&cfg)?;
            let taus = linear_grid(10.0 / eff.purcell[0], 60);
            let full = Engine::from_config(&cfg)?.g2_positive("a", "a", &taus)?;
            let approx = eff.engine()?.g2_positive("a", "a", &taus)?;
            let err = full.iter().zip(&approx).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            for k in 0..taus.len() {
                rows.push((vec![d.to_string()], vec![e, taus[k], full[k], approx[k]]));
            }
            errs.push(err);
            configs.push(cfg);
        }
        let monotone = errs.windows(2).all(|w| w[1] < w[0]);
        summary.push(json!({"d": d, "epsilon": eps, "sup_error": errs, "monotone": monotone}));
    }
    hash_configs(out, "g2cmp", &configs)?;
    out.write_rows("g2cmp.csv", &["d", "epsilon", "tau_over_kappa_inv", "g2_full", "g2_effective"], &rows)?;
    out.write_json("summary.json", &json!({"comparisons": summary}))
}

fn fig5e(out: &mut Output) -> Result<()> {
    let cfg = presets::fig5e();
    hash_configs(out, "fig5e", std::slice::from_ref(&cfg))?;
    let kl = build_kerr_liouvillian(&cfg, false)?;
    let times = default_time_grid(25e-9, 10e-12, 100e-12);
    let run = kl.run(&times)?;
    let (a, idler) = (run.flux("a")?, run.flux("idler")?);
    out.write_columns(
        "fig5e_flux.csv",
        &["t_s".into(), "flux_signal".into(), "flux_idler".into()],
        &[run.times.clone(), a.to_vec(), idler.to_vec()],
    )?;
    let kappa = presets::kerr_kappa();
    let slow_target = 1.0 / presets::FIG5_LIFETIME;
    let fit = fit_two_timescales(&run.times, a, 0.4e-9, 20e-9, (kappa, slow_target))?;
    let map = kl.pulsed_two_time(&run, "idler", "a")?;
    let report = car(&map, &run, &presets::FIG5_WINDOWS, &presets::FIG5_BACKGROUND)?;
    out.write_json(
        "summary.json",
        &json!({
            "pairs_per_pulse": run.pairs_per_pulse,
            "fast_rate": fit.fast,
            "fast_over_kappa": fit.fast / kappa,
            "slow_rate": fit.slow,
            "slow_over_total_emitter_decay": fit.slow / slow_target,
            "car": report,
            "background_counts_per_s": presets::FIG5_BACKGROUND.signal_rate,
            "flags": run.flags,
        }),
    )
}
