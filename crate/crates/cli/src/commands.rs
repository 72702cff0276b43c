use crate::output::Output;
use crate::units::{parse_time, parse_windows};
use anyhow::{anyhow, bail, Context, Result};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ring_cqed::analytic::{g2_diffused, g2_diffused_mc, g2_indep_2level, g2_indep_3level, xi_phi, IndepEnsemble, Pair};
use ring_cqed::badcavity::effective_couplings;
use ring_cqed::bosonic::{gaussian_g2, gaussian_steady_state, spin_vs_boson_compare, QuadraticModel};
use ring_cqed::config::{validate_file, ConfigFile, MHZ};
use ring_cqed::correlation::{chirality_metric, default_tau_grid, symmetric_taus, CorrelationCurve};
use ring_cqed::dynamics::{detuning_sweep, slowest_rate, Engine};
use ring_cqed::fitting::{
    fit_backscatter, fit_g2, fit_strong_coupling, hom_dephasing_bound, BackscatterSetup, FitProblem, Series,
    StrongCouplingSetup,
};
use ring_cqed::kerr::{build_kerr_liouvillian, car, default_time_grid, fit_two_timescales, Background, CoincidenceWindows};
use ring_cqed::model::SystemConfig;
use ring_cqed::space::Mode;
use serde_json::json;
use std::path::Path;

pub struct Loaded {
    pub file: ConfigFile,
    pub system: SystemConfig,
}

pub fn load(path: &Path) -> Result<Loaded> {
    let file = ConfigFile::load(path).with_context(|| format!("loading {}", path.display()))?;
    let system = file.to_system()?;
    Ok(Loaded { file, system })
}

impl Loaded {
    /// Delay grid from the command line, the file's numerics section, or
    /// 20 slowest lifetimes.
    pub fn taus(&self, tau_max_ns: Option<f64>, points: Option<usize>) -> Vec<f64> {
        let tau_max = tau_max_ns
            .or(self.file.numerics.tau_max_ns)
            .map(|t| t * 1e-9)
            .unwrap_or_else(|| 20.0 / slowest_rate(&self.system));
        default_tau_grid(tau_max, points.unwrap_or(self.file.numerics.tau_points))
    }
}

pub fn parse_pairs(s: &str) -> Result<Vec<(String, String)>> {
    s.split(',')
        .map(|p| {
            let p = p.trim();
            let mut chars = p.chars();
            match (chars.next(), chars.next(), chars.next()) {
                (Some(x), Some(y), None) => Ok((x.to_string(), y.to_string())),
                _ => bail!("channel pair '{p}' must be two letters such as ab"),
            }
        })
        .collect()
}

fn curve_columns(curves: &[CorrelationCurve]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut header = vec!["tau_s".to_string()];
    let mut cols = vec![curves[0].taus.clone()];
    for c in curves {
        header.push(format!("g2_{}", c.label()));
        cols.push(c.values.clone());
    }
    (header, cols)
}

pub fn validate(path: &Path) -> Result<()> {
    let file = ConfigFile::load(path)?;
    let r = validate_file(&file)?;
    println!("OK: {} emitter(s), levels {:?}, modes {:?}", r.emitters, r.levels, r.modes);
    println!("Hilbert-space dimension D={} (cap {})", r.dimension, r.dim_cap);
    match r.hurwitz {
        Some(true) => println!("quadratic analogue: stable"),
        Some(false) => println!("quadratic analogue: UNSTABLE"),
        None => {}
    }
    for w in &r.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn engine_for(cfg: &SystemConfig, effective: bool) -> Result<Engine> {
    Ok(if effective {
        effective_couplings(cfg)?.engine()?
    } else {
        Engine::from_config(cfg)?
    })
}

pub fn correlate(
    out: &mut Output,
    loaded: &Loaded,
    pairs: &str,
    effective: bool,
    tau_max_ns: Option<f64>,
    points: Option<usize>,
) -> Result<()> {
    out.set_config(&loaded.file.to_json());
    let engine = engine_for(&loaded.system, effective)?;
    let pos = loaded.taus(tau_max_ns, points);
    let curves: Vec<CorrelationCurve> = parse_pairs(pairs)?
        .iter()
        .map(|(x, y)| engine.g2(x, y, &pos))
        .collect::<ring_cqed::Result<_>>()?;
    let (header, cols) = curve_columns(&curves);
    out.write_columns("g2.csv", &header, &cols)?;
    let chirality: Vec<_> = curves
        .iter()
        .filter(|c| c.channels[0] != c.channels[1])
        .map(|c| json!({"pair": c.label(), "metric": chirality_metric(c).ok()}))
        .collect();
    let flags: Vec<&String> = engine.flags.iter().chain(curves.iter().flat_map(|c| &c.flags)).collect();
    out.write_json(
        "summary.json",
        &json!({
            "model": if effective { "effective" } else { "full" },
            "intensities": engine.channels.iter().map(|c| json!({"channel": c.label, "intensity": c.intensity})).collect::<Vec<_>>(),
            "steady_state": {"residual": engine.steady.residual, "gap": engine.steady.gap},
            "zero_delay": curves.iter().map(|c| json!({"pair": c.label(), "g2": c.values[c.taus.len() / 2]})).collect::<Vec<_>>(),
            "chirality": chirality,
            "flags": flags,
        }),
    )
}

pub fn g3(out: &mut Output, loaded: &Loaded, channels: &str, effective: bool, tau_max_ns: Option<f64>, points: usize) -> Result<()> {
    let ch: Vec<String> = channels.chars().map(|c| c.to_string()).collect();
    if ch.len() != 3 {
        bail!("g3 needs three channels, e.g. aab");
    }
    out.set_config(&loaded.file.to_json());
    let engine = engine_for(&loaded.system, effective)?;
    let tau_max = tau_max_ns
        .map(|t| t * 1e-9)
        .unwrap_or_else(|| 5.0 / slowest_rate(&loaded.system));
    let n = points.max(2);
    let taus: Vec<f64> = (0..n).map(|k| -tau_max + 2.0 * tau_max * k as f64 / (n - 1) as f64).collect();
    let s = engine.g3(&ch[0], &ch[1], &ch[2], &taus, &taus)?;
    let rows: Vec<(Vec<String>, Vec<f64>)> = (0..s.tau1s.len())
        .flat_map(|i| (0..s.tau2s.len()).map(move |j| (i, j)))
        .map(|(i, j)| (vec![], vec![s.tau1s[i], s.tau2s[j], s.at(i, j)]))
        .collect();
    out.write_rows("g3.csv", &["tau1_s", "tau2_s", "g3"], &rows)?;
    out.write_json("summary.json", &json!({"channels": s.channels, "normalization": s.normalization, "flags": s.flags}))
}

pub fn effective(out: &mut Output, loaded: &Loaded) -> Result<()> {
    out.set_config(&loaded.file.to_json());
    let m = effective_couplings(&loaded.system)?;
    let n = m.n();
    let rows: Vec<(Vec<String>, Vec<f64>)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .map(|(a, b)| {
            (
                vec![a.to_string(), b.to_string()],
                vec![m.j[(a, b)].re, m.j[(a, b)].im, m.gamma[(a, b)].re, m.gamma[(a, b)].im],
            )
        })
        .collect();
    out.write_rows("couplings.csv", &["m", "n", "j_re", "j_im", "gamma_re", "gamma_im"], &rows)?;
    let (spectrum, _) = m.gamma_spectrum()?;
    let loops: Vec<_> = if n >= 3 {
        (0..n)
            .flat_map(|i| (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| (i, j, k))))
            .map(|(i, j, k)| json!({"loop": [i, j, k], "phase": m.loop_phase(i, j, k)}))
            .collect()
    } else {
        Vec::new()
    };
    out.write_json(
        "summary.json",
        &json!({"kappa": m.kappa, "purcell": m.purcell, "gamma_eigenvalues": spectrum, "loop_phases": loops}),
    )
}

pub fn analytic(
    out: &mut Output,
    loaded: &Loaded,
    pairs: &str,
    diffusion_mhz: Option<f64>,
    mc_samples: Option<usize>,
    seed: u64,
    tau_max_ns: Option<f64>,
    points: Option<usize>,
) -> Result<()> {
    out.set_config(&loaded.file.to_json());
    let model = effective_couplings(&loaded.system)?;
    let mut ens = IndepEnsemble::from_effective(&model);
    if let Some(s) = diffusion_mhz {
        for e in &mut ens.emitters {
            e.s = s * MHZ;
        }
    }
    let three = loaded.system.levels().contains(&3);
    let pos = loaded.taus(tau_max_ns, points);
    let taus = symmetric_taus(&pos);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut header = vec!["tau_s".to_string()];
    let mut cols = vec![taus.clone()];
    let mut oscillatory = false;
    for (x, y) in parse_pairs(pairs)? {
        let pair = Pair::parse(&format!("{x}{y}")).ok_or_else(|| anyhow!("unknown pair {x}{y}"))?;
        let mut vals = Vec::with_capacity(taus.len());
        for &t in &taus {
            let v = if diffusion_mhz.is_some() {
                let r = g2_diffused(&ens, pair, t)?;
                oscillatory |= r.oscillatory;
                r.value
            } else if three {
                let r = g2_indep_3level(&ens, pair, t)?;
                oscillatory |= r.oscillatory;
                r.value
            } else {
                g2_indep_2level(&ens, pair, t)?
            };
            vals.push(v);
        }
        header.push(format!("g2_{x}{y}"));
        cols.push(vals);
        if let (Some(n), Some(_)) = (mc_samples, diffusion_mhz) {
            let mut mean = Vec::with_capacity(taus.len());
            let mut sem = Vec::with_capacity(taus.len());
            for &t in &taus {
                let (m, s) = g2_diffused_mc(&ens, pair, t, n, &mut rng)?;
                mean.push(m);
                sem.push(s);
            }
            header.push(format!("g2_{x}{y}_mc"));
            header.push(format!("g2_{x}{y}_mc_sem"));
            cols.push(mean);
            cols.push(sem);
        }
    }
    out.write_columns("analytic.csv", &header, &cols)?;
    out.write_json(
        "summary.json",
        &json!({"xi_phi": xi_phi(&ens)?, "three_level": three, "oscillatory": oscillatory, "emitters": ens.emitters}),
    )
}

pub fn bosonic(out: &mut Output, loaded: &Loaded, pairs: &str, compare: bool, tau_max_ns: Option<f64>, points: Option<usize>) -> Result<()> {
    out.set_config(&loaded.file.to_json());
    let model = QuadraticModel::from_config(&loaded.system)?;
    let hurwitz = model.is_hurwitz()?;
    if !hurwitz {
        bail!("quadratic model is unstable (not Hurwitz); no steady state");
    }
    let state = gaussian_steady_state(&model)?;
    let pos = loaded.taus(tau_max_ns, points);
    let curves: Vec<CorrelationCurve> = parse_pairs(pairs)?
        .iter()
        .map(|(x, y)| gaussian_g2(&model, (x, y), &pos))
        .collect::<ring_cqed::Result<_>>()?;
    let (header, cols) = curve_columns(&curves);
    out.write_columns("bosonic.csv", &header, &cols)?;
    let occupations: Vec<_> = ["a", "b"]
        .iter()
        .map(|l| -> Result<_> { Ok(json!({"mode": l, "occupation": state.occupation(model.mode_index(l)?)})) })
        .collect::<Result<_>>()?;
    let comparison = if compare {
        Some(spin_vs_boson_compare(&loaded.system, &pos)?)
    } else {
        None
    };
    out.write_json(
        "summary.json",
        &json!({"hurwitz": hurwitz, "occupations": occupations, "residual": state.residual, "flags": state.flags, "spin_comparison": comparison}),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn kerr(
    out: &mut Output,
    loaded: &Loaded,
    windows: &str,
    background: f64,
    include_b: bool,
    fine_ps: f64,
    coarse_ps: f64,
    map: bool,
) -> Result<()> {
    out.set_config(&loaded.file.to_json());
    let cfg = &loaded.system;
    let kp = cfg.kerr.as_ref().ok_or_else(|| anyhow!("config has no kerr section"))?;
    let (fast, slow) = parse_windows(windows)?;
    let w = CoincidenceWindows { fast, slow };
    w.validate(kp.pump.rep_period)?;
    let kl = build_kerr_liouvillian(cfg, include_b)?;
    let times = default_time_grid(kp.pump.rep_period, fine_ps * 1e-12, coarse_ps * 1e-12);
    let run = kl.run(&times)?;
    let mut header = vec!["t_s".to_string()];
    let mut cols = vec![run.times.clone()];
    for (label, f) in &run.fluxes {
        header.push(format!("flux_{label}"));
        cols.push(f.clone());
    }
    out.write_columns("flux.csv", &header, &cols)?;
    let kappa = cfg.cavity.kappa();
    let pump_end = kp.pump.t0 + kp.pump.dt * (kp.pump.samples.len() - 1) as f64;
    let slow_guess = cfg
        .emitters
        .first()
        .map(|e| e.gamma + 2.0 * e.g * e.g / kappa)
        .unwrap_or(kappa / 20.0);
    let timescales = if cfg.emitters.is_empty() {
        None
    } else {
        fit_two_timescales(&run.times, run.flux("a")?, pump_end, 0.8 * kp.pump.rep_period, (kappa, slow_guess)).ok()
    };
    let car_report = if map {
        let m = kl.pulsed_two_time(&run, "idler", "a")?;
        let n = m.times.len();
        let rows: Vec<(Vec<String>, Vec<f64>)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (vec![], vec![m.times[i], m.times[j], m.at(i, j)]))
            .collect();
        out.write_rows("coincidences.csv", &["t_idler_s", "t_signal_s", "g2_flux"], &rows)?;
        let bg = Background {
            signal_rate: background,
            idler_rate: background,
        };
        Some(car(&m, &run, &w, &bg)?)
    } else {
        None
    };
    out.write_json(
        "summary.json",
        &json!({
            "pairs_per_pulse": run.pairs_per_pulse,
            "kappa": kappa,
            "two_timescales": timescales,
            "car": car_report,
            "background_counts_per_s": background,
            "flags": run.flags,
        }),
    )
}

pub fn read_series(path: &Path) -> Result<Series> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (mut x, mut y, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let nums: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match nums {
            Ok(v) if v.len() >= 2 => {
                x.push(v[0]);
                y.push(v[1]);
                if v.len() > 2 {
                    w.push(v[2]);
                }
            }
            Ok(_) => bail!("{}:{}: expected x,value[,weight]", path.display(), k + 1),
            Err(_) if x.is_empty() => continue, // header
            Err(_) => bail!("{}:{}: non-numeric field", path.display(), k + 1),
        }
    }
    if !w.is_empty() && w.len() != x.len() {
        bail!("{}: weights given for some rows only", path.display());
    }
    Ok(Series::new(x, y, if w.is_empty() { None } else { Some(w) })?)
}

pub fn fit_g2_cmd(out: &mut Output, aa: &Path, ab: Option<&Path>, jitter: &str, gamma_s_mhz: f64) -> Result<()> {
    let saa = read_series(aa)?;
    let sab = ab.map(read_series).transpose()?;
    let problem = FitProblem::g2_default(parse_time(jitter)?, gamma_s_mhz * MHZ);
    out.set_config(&serde_json::to_string(&(&saa, &sab, &problem))?);
    let report = fit_g2(&saa, sab.as_ref(), &problem)?;
    let stderr: serde_json::Map<String, serde_json::Value> =
        report.free.iter().map(|n| (n.clone(), json!(report.stderr(n)))).collect();
    out.write_json("fit.json", &json!({"report": report, "stderr": stderr}))
}

pub fn fit_backscatter_cmd(out: &mut Output, trace: &Path, setup: &Path, g_max_mhz: f64, g_bs_max_mhz: f64) -> Result<()> {
    let s = read_series(trace)?;
    let setup: BackscatterSetup = serde_json::from_str(&std::fs::read_to_string(setup)?).context("parsing setup")?;
    out.set_config(&serde_json::to_string(&(&s, &setup, g_max_mhz, g_bs_max_mhz))?);
    let fit = fit_backscatter(&s, &setup, g_max_mhz * MHZ, g_bs_max_mhz * MHZ)?;
    out.write_json("fit.json", &fit)
}

pub fn fit_strong_cmd(out: &mut Output, trace: &Path, setup: &Path, g_max_mhz: f64, center_range_mhz: &str) -> Result<()> {
    let s = read_series(trace)?;
    let setup: StrongCouplingSetup = serde_json::from_str(&std::fs::read_to_string(setup)?).context("parsing setup")?;
    let (lo, hi) = center_range_mhz
        .split_once(':')
        .ok_or_else(|| anyhow!("center range must be lo:hi (MHz)"))?;
    let range = (lo.trim().parse::<f64>()? * MHZ, hi.trim().parse::<f64>()? * MHZ);
    out.set_config(&serde_json::to_string(&(&s, &setup, g_max_mhz, range))?);
    let fit = fit_strong_coupling(&s, &setup, g_max_mhz * MHZ, range)?;
    out.write_json("fit.json", &fit)
}

pub fn fit_hom_cmd(out: &mut Output, visibility: f64, gamma_mhz: f64) -> Result<()> {
    out.set_config(&format!("{visibility} {gamma_mhz}"));
    let gp = hom_dephasing_bound(visibility, gamma_mhz)?;
    println!("pure dephasing bound: {gp:.2} MHz");
    out.write_json("fit.json", &json!({"visibility": visibility, "gamma_mhz": gamma_mhz, "gamma_deph_max_mhz": gp}))
}

pub fn sweep(
    out: &mut Output,
    loaded: &Loaded,
    range_mhz: &str,
    steps: usize,
    pair: &str,
    tau_max_ns: Option<f64>,
    points: Option<usize>,
) -> Result<()> {
    out.set_config(&loaded.file.to_json());
    let (lo, hi) = parse_window_mhz(range_mhz)?;
    let steps = steps.max(1);
    let offsets: Vec<f64> = (0..steps)
        .map(|k| if steps == 1 { lo } else { lo + (hi - lo) * k as f64 / (steps - 1) as f64 } * MHZ)
        .collect();
    let p = parse_pairs(pair)?;
    let (x, y) = p.first().ok_or_else(|| anyhow!("no pair given"))?;
    let mode = |s: &str| Mode::parse(s).ok_or_else(|| anyhow!("unknown channel {s}"));
    let pos = loaded.taus(tau_max_ns, points);
    let points = detuning_sweep(&loaded.system, &offsets, (mode(x)?, mode(y)?), &pos)?;
    write_sweep(out, &points)
}

fn parse_window_mhz(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| anyhow!("range must be lo:hi (MHz)"))?;
    Ok((lo.trim().parse()?, hi.trim().parse()?))
}

pub fn write_sweep(out: &mut Output, points: &[ring_cqed::dynamics::SweepPoint]) -> Result<()> {
    let labels: Vec<String> = points
        .first()
        .map(|p| p.intensities.iter().map(|(l, _)| format!("intensity_{l}")).collect())
        .unwrap_or_default();
    let mut header = vec!["offset_rad_s".to_string(), "chirality".to_string()];
    header.extend(labels);
    let mut cols = vec![
        points.iter().map(|p| p.detuning).collect::<Vec<_>>(),
        points.iter().map(|p| p.chirality.unwrap_or(f64::NAN)).collect(),
    ];
    for k in 0..points.first().map_or(0, |p| p.intensities.len()) {
        cols.push(points.iter().map(|p| p.intensities[k].1).collect());
    }
    out.write_columns("sweep.csv", &header, &cols)?;
    let rows: Vec<(Vec<String>, Vec<f64>)> = points
        .iter()
        .flat_map(|p| p.curve.taus.iter().zip(&p.curve.values).map(move |(t, v)| (vec![], vec![p.detuning, *t, *v])))
        .collect();
    out.write_rows("sweep_curves.csv", &["offset_rad_s", "tau_s", "g2"], &rows)
}
