use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use nfbeam::beamspace::{beam_pattern, lobe_report, sparsity_prefactor, DftCodebook, PatternModel};
use nfbeam::channel::SphericalPoint;
use nfbeam::error::Error;
use nfbeam::estimator::Method;
use nfbeam::harness::{
    compute_nmse, compute_rho_db, emit_beamspace_figure, heatmap_svg, run_sweep, sweep_points, ExperimentConfig,
    Profile, SweepKind, SweepPoint, TrialContext,
};
use nfbeam::rng::derive_seed;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_TRIAL_FAILURES: u8 = 3;
const MAX_FAILURE_FRACTION: f64 = 0.05;

#[derive(Parser, Debug)]
#[command(name = "nfbeam", version, about = "Near-field beamspace analysis and compressive channel estimation")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// JSON config document; fields not present keep the profile defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Snr,
    Measurement,
    Paths,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Exact,
    Separable,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Beam-pattern map of one near-field path plus its lobe report.
    Pattern {
        /// Spatial variable along y (`sin θ sin φ`).
        #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
        u: f64,
        /// Spatial variable along z (`cos θ`).
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        v: f64,
        /// Range in meters; defaults to the mean of the configured scene range.
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, value_enum, default_value_t = ModelArg::Exact)]
        model: ModelArg,
        #[arg(long)]
        svg: bool,
    },
    /// Monte Carlo evaluation of the expected beamspace sparsity.
    Sparsity {
        /// Path count; defaults to the config's `l_paths`.
        #[arg(long)]
        paths: Option<usize>,
        /// Monte Carlo samples; defaults to the config's `sparsity_mc_samples`.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// One trial at the fixed operating point, with per-method diagnostics.
    Estimate {
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        #[arg(long)]
        m_over_n: Option<f64>,
    },
    /// Monte Carlo sweep; writes trials.csv, summary.csv and config.resolved.json.
    Sweep {
        #[arg(long, value_enum)]
        kind: KindArg,
    },
    /// Beamspace magnitude maps of one trial, true and estimated.
    FigureBeamspace {
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long)]
        svg: bool,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
    Trials(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Trials(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_TRIAL_FAILURES)
        }
    }
}

fn resolve_config(g: &GlobalOpts) -> Result<ExperimentConfig, Failure> {
    let base = g.profile.map(|p| match p {
        ProfileArg::Desk => Profile::Desk,
        ProfileArg::Paper => Profile::Paper,
    });
    let mut cfg = match &g.config {
        Some(path) => ExperimentConfig::load(base, path).map_err(|e| Failure::Config(e.to_string()))?,
        None => ExperimentConfig::for_profile(base.unwrap_or(Profile::Desk)),
    };
    if let Some(seed) = g.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &g.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
    Ok(p)
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON value serializes") + "\n"
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = resolve_config(&cli.global)?;
    let threads = cli.global.threads;
    let out = cfg.output_dir.clone();
    match cli.command {
        Command::Pattern { u, v, r, model, svg } => {
            let geom = cfg.geometry.build()?;
            let book = DftCodebook::new(&geom);
            let r = match r {
                Some(r) => r,
                None => cfg.scene.mean_point(&geom)?.2,
            };
            let path = SphericalPoint::from_uv(u, v, r)?;
            let model = match model {
                ModelArg::Exact => PatternModel::Exact,
                ModelArg::Separable => PatternModel::Separable,
            };
            let grid = beam_pattern(&geom, &path, &book, model)?;
            let report = lobe_report(&geom, &book, &path)?;
            let doc = json!({
                "n_y": geom.n_y(),
                "n_z": geom.n_z(),
                "u": u,
                "v": v,
                "r_m": r,
                "rayleigh_m": geom.rayleigh_distance(),
                "fresnel_m": geom.fresnel_distance(),
                "model": model,
                "lobe": report,
            });
            let text = pretty(&doc);
            print!("{text}");
            write(&out, "pattern.csv", &grid.to_csv())?;
            write(&out, "lobe.json", &text)?;
            if svg {
                write(&out, "pattern.svg", &heatmap_svg(&grid, "pattern"))?;
            }
            eprintln!("wrote {}", out.display());
        }
        Command::Sparsity { paths, samples } => {
            let geom = cfg.geometry.build()?;
            let book = DftCodebook::new(&geom);
            let l = paths.unwrap_or(cfg.l_paths);
            let n = samples.unwrap_or(cfg.estimator.sparsity_mc_samples);
            let seed = derive_seed(cfg.master_seed, "sparsity", &[l as u64]);
            let (r_lo, r_hi) = cfg.scene.range_bounds(&geom)?;
            let start = std::time::Instant::now();
            let ek = nfbeam::beamspace::expected_sparsity(&geom, &book, l, &cfg.scene, n, seed)?;
            let doc = json!({
                "n_y": geom.n_y(),
                "n_z": geom.n_z(),
                "carrier_freq_hz": geom.carrier_freq_hz(),
                "l_paths": l,
                "mc_samples": n,
                "seed": seed,
                "range_m": [r_lo, r_hi],
                "prefactor": sparsity_prefactor(&book, l),
                "expected_sparsity": ek,
                "elapsed_s": start.elapsed().as_secs_f64(),
            });
            let text = pretty(&doc);
            print!("{text}");
            if cli.global.out.is_some() {
                write(&out, "sparsity.json", &text)?;
            }
        }
        Command::Estimate { trial, snr, m_over_n } => {
            let ctx = TrialContext::new(&cfg)?;
            let point = SweepPoint {
                index: 0,
                snr_db: snr.unwrap_or(cfg.fixed_snr_db),
                m_over_n: m_over_n.unwrap_or(cfg.fixed_m_over_n),
                l_paths: cfg.l_paths,
            };
            let (seeds, art) = ctx.run_artifacts(&point, trial, &cfg.methods)?;
            let methods: Vec<_> = art
                .estimates
                .iter()
                .map(|e| {
                    json!({
                        "method": e.method,
                        "nmse": compute_nmse(&e.h_hat, &art.h).ok(),
                        "rho_db": compute_rho_db(&e.h_hat, &art.h).ok(),
                        "diagnostics": e.diagnostics,
                    })
                })
                .collect();
            let doc = json!({
                "config_hash": cfg.hash(),
                "trial": trial,
                "point": point,
                "m_pilots": art.op.m_pilots(),
                "noise_var": art.y.noise_var,
                "seeds": seeds,
                "dilation": ctx.dilation,
                "estimator": art.estimator,
                "scene": art.scene,
                "methods": methods,
            });
            let text = pretty(&doc);
            print!("{text}");
            if cli.global.out.is_some() {
                write(&out, "estimate.json", &text)?;
            }
        }
        Command::Sweep { kind } => {
            let kind = match kind {
                KindArg::Snr => SweepKind::Snr,
                KindArg::Measurement => SweepKind::Measurement,
                KindArg::Paths => SweepKind::Paths,
            };
            let start = std::time::Instant::now();
            let result = run_sweep(&cfg, kind, threads)?;
            result.write(&cfg, &out)?;
            let points = sweep_points(&cfg, kind);
            println!(
                "{:>6} {:>8} {:>6} {:>3}  {:<9} {:>10} {:>10} {:>9}",
                "point", "snr_db", "M/N", "L", "method", "med_nmse", "mean_nmse", "med_rho"
            );
            for s in &result.summary {
                let p = &points[s.point_index];
                println!(
                    "{:>6} {:>8.2} {:>6.3} {:>3}  {:<9} {:>10.4} {:>10.4} {:>9.2}",
                    s.point_index,
                    p.snr_db,
                    p.m_over_n,
                    p.l_paths,
                    s.method,
                    s.median_nmse,
                    s.mean_nmse,
                    s.median_rho_db
                );
            }
            let failed = result.failed_trials();
            let total = result.results.len();
            let footer = format!(
                "{} sweep: {total} trial rows, {failed} failed ({:.2}%), {} threads, {:.1} s, hash {}, output {}",
                kind.name(),
                100.0 * result.failure_fraction(),
                result.threads,
                start.elapsed().as_secs_f64(),
                result.config_hash,
                out.display()
            );
            if result.failure_fraction() > MAX_FAILURE_FRACTION {
                let mut msg = footer;
                for r in result.results.iter().filter(|r| r.failed).take(10) {
                    msg.push_str(&format!(
                        "\n  point {} trial {} {}: {}",
                        r.point_index,
                        r.trial_id,
                        r.method,
                        r.error.as_deref().unwrap_or("unknown")
                    ));
                }
                return Err(Failure::Trials(msg));
            }
            eprintln!("{footer}");
        }
        Command::FigureBeamspace { trial, svg } => {
            let methods: Vec<Method> = cfg.methods.clone();
            let written = emit_beamspace_figure(&cfg, trial, &methods, &out, svg)?;
            for p in written {
                eprintln!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}
