mod commands;
mod output;
mod recipes;
mod units;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use output::Output;
use std::path::PathBuf;
use std::process::ExitCode;

/// Cavity-QED simulations of phase-disordered emitters in a two-mode ring
/// resonator.
#[derive(Parser)]
#[command(name = "ring-cqed", version)]
struct Cli {
    /// Seed for every random draw of the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory (CSV/JSON plus manifest.json).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Grid {
    /// Largest delay in ns (default: config numerics, else 20 slowest lifetimes).
    #[arg(long)]
    tau_max_ns: Option<f64>,
    /// Number of non-negative delays.
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Schema and invariant checks with a dimension estimate.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Steady-state g² curves.
    Correlate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "aa,ab,bb")]
        pairs: String,
        /// Use the bad-cavity effective model.
        #[arg(long)]
        effective: bool,
        #[command(flatten)]
        grid: Grid,
    },
    /// Third-order correlation surface.
    G3 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "aab")]
        channels: String,
        #[arg(long)]
        effective: bool,
        #[arg(long)]
        tau_max_ns: Option<f64>,
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
    /// Bad-cavity couplings J and Γ.
    Effective {
        #[arg(long)]
        config: PathBuf,
    },
    /// Independent-emitter closed forms.
    Analytic {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "aa,ab")]
        pairs: String,
        /// Spectral-diffusion standard deviation (MHz).
        #[arg(long)]
        diffusion_mhz: Option<f64>,
        /// Also average over this many random detuning draws.
        #[arg(long)]
        mc_samples: Option<usize>,
        #[command(flatten)]
        grid: Grid,
    },
    /// Pulsed parametric pair generation and coincidences.
    Kerr {
        #[arg(long)]
        config: PathBuf,
        /// Fast and slow windows after the pulse.
        #[arg(long, default_value = "0:0.8ns,1.8ns:20ns")]
        windows: String,
        /// Background counts per second on each detector.
        #[arg(long, default_value_t = 0.0)]
        background: f64,
        /// Keep the counter-propagating mode.
        #[arg(long)]
        include_b: bool,
        #[arg(long, default_value_t = 10.0)]
        fine_ps: f64,
        #[arg(long, default_value_t = 100.0)]
        coarse_ps: f64,
        /// Skip the coincidence map (fluxes only).
        #[arg(long)]
        no_map: bool,
    },
    /// Gaussian steady state of the bosonic analogue.
    Bosonic {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "aa,ab,bb")]
        pairs: String,
        /// Compare against the emitter model.
        #[arg(long)]
        compare: bool,
        #[command(flatten)]
        grid: Grid,
    },
    /// Parameter extraction.
    #[command(subcommand)]
    Fit(FitCmd),
    /// Cavity detuning sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Offset range lo:hi in MHz.
        #[arg(long, allow_hyphen_values = true)]
        range_mhz: String,
        #[arg(long, default_value_t = 21)]
        steps: usize,
        #[arg(long, default_value = "ab")]
        pair: String,
        #[command(flatten)]
        grid: Grid,
    },
    /// Canned figure recipes: fig3, fig4a, fig4e, g2cmp, fig5e.
    Reproduce { figure: String },
}

#[derive(Subcommand)]
enum FitCmd {
    /// Auto (and cross) correlation fit; CSV rows tau_s,value[,weight].
    G2 {
        #[arg(long)]
        aa: PathBuf,
        #[arg(long)]
        ab: Option<PathBuf>,
        #[arg(long, default_value = "82ps")]
        jitter_fwhm: String,
        /// Fixed shelf return rate (MHz).
        #[arg(long, default_value_t = 1.6)]
        gamma_s_mhz: f64,
    },
    /// Back-scattering interference trace.
    Backscatter {
        #[arg(long)]
        trace: PathBuf,
        /// JSON setup (SI units).
        #[arg(long)]
        setup: PathBuf,
        #[arg(long)]
        g_max_mhz: f64,
        #[arg(long)]
        g_bs_max_mhz: f64,
    },
    /// Strong-coupling transport trace.
    Strong {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        setup: PathBuf,
        #[arg(long)]
        g_max_mhz: f64,
        /// Emitter center search range lo:hi (MHz).
        #[arg(long, allow_hyphen_values = true)]
        center_range_mhz: String,
    },
    /// Dephasing bound from two-photon interference visibility.
    Hom {
        #[arg(long)]
        visibility: f64,
        /// Total emitter decay rate (MHz).
        #[arg(long)]
        gamma_mhz: f64,
    },
}

fn configure_workers() -> Result<()> {
    if let Ok(v) = std::env::var("RING_CQED_WORKERS") {
        let n: usize = v.parse().context("RING_CQED_WORKERS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_workers()?;
    let name = match &cli.cmd {
        Cmd::Validate { config } => return commands::validate(config),
        Cmd::Correlate { .. } => "correlate",
        Cmd::G3 { .. } => "g3",
        Cmd::Effective { .. } => "effective",
        Cmd::Analytic { .. } => "analytic",
        Cmd::Kerr { .. } => "kerr",
        Cmd::Bosonic { .. } => "bosonic",
        Cmd::Fit(_) => "fit",
        Cmd::Sweep { .. } => "sweep",
        Cmd::Reproduce { .. } => "reproduce",
    };
    let mut out = Output::new(&cli.out, name, cli.seed)?;
    match &cli.cmd {
        Cmd::Validate { .. } => unreachable!(),
        Cmd::Correlate { config, pairs, effective, grid } => {
            commands::correlate(&mut out, &commands::load(config)?, pairs, *effective, grid.tau_max_ns, grid.points)?
        }
        Cmd::G3 {
            config,
            channels,
            effective,
            tau_max_ns,
            points,
        } => commands::g3(&mut out, &commands::load(config)?, channels, *effective, *tau_max_ns, *points)?,
        Cmd::Effective { config } => commands::effective(&mut out, &commands::load(config)?)?,
        Cmd::Analytic {
            config,
            pairs,
            diffusion_mhz,
            mc_samples,
            grid,
        } => commands::analytic(
            &mut out,
            &commands::load(config)?,
            pairs,
            *diffusion_mhz,
            *mc_samples,
            cli.seed,
            grid.tau_max_ns,
            grid.points,
        )?,
        Cmd::Kerr {
            config,
            windows,
            background,
            include_b,
            fine_ps,
            coarse_ps,
            no_map,
        } => commands::kerr(
            &mut out,
            &commands::load(config)?,
            windows,
            *background,
            *include_b,
            *fine_ps,
            *coarse_ps,
            !*no_map,
        )?,
        Cmd::Bosonic {
            config,
            pairs,
            compare,
            grid,
        } => commands::bosonic(&mut out, &commands::load(config)?, pairs, *compare, grid.tau_max_ns, grid.points)?,
        Cmd::Fit(f) => match f {
            FitCmd::G2 {
                aa,
                ab,
                jitter_fwhm,
                gamma_s_mhz,
            } => commands::fit_g2_cmd(&mut out, aa, ab.as_deref(), jitter_fwhm, *gamma_s_mhz)?,
            FitCmd::Backscatter {
                trace,
                setup,
                g_max_mhz,
                g_bs_max_mhz,
            } => commands::fit_backscatter_cmd(&mut out, trace, setup, *g_max_mhz, *g_bs_max_mhz)?,
            FitCmd::Strong {
                trace,
                setup,
                g_max_mhz,
                center_range_mhz,
            } => commands::fit_strong_cmd(&mut out, trace, setup, *g_max_mhz, center_range_mhz)?,
            FitCmd::Hom { visibility, gamma_mhz } => commands::fit_hom_cmd(&mut out, *visibility, *gamma_mhz)?,
        },
        Cmd::Sweep {
            config,
            range_mhz,
            steps,
            pair,
            grid,
        } => commands::sweep(&mut out, &commands::load(config)?, range_mhz, *steps, pair, grid.tau_max_ns, grid.points)?,
        Cmd::Reproduce { figure } => recipes::run(&mut out, figure)?,
    }
    let manifest = out.finish()?;
    println!("wrote {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
