//! Sweeps over SNR, measurement ratio or path count, with CSV output.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::metrics::{mean, median};
use super::trial::{SweepPoint, TrialContext, TrialResult};
use crate::error::{Error, Result};
use crate::estimator::Method;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Snr,
    Measurement,
    Paths,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Snr => "snr",
            SweepKind::Measurement => "measurement",
            SweepKind::Paths => "paths",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(SweepKind::Snr),
            "measurement" => Ok(SweepKind::Measurement),
            "paths" => Ok(SweepKind::Paths),
            other => Err(Error::config(format!("unknown sweep kind '{other}'"))),
        }
    }
}

pub fn sweep_points(cfg: &ExperimentConfig, kind: SweepKind) -> Vec<SweepPoint> {
    match kind {
        SweepKind::Snr => cfg
            .snr_grid_db
            .iter()
            .enumerate()
            .map(|(index, &snr_db)| SweepPoint { index, snr_db, m_over_n: cfg.fixed_m_over_n, l_paths: cfg.l_paths })
            .collect(),
        SweepKind::Measurement => cfg
            .measurement_factors
            .iter()
            .enumerate()
            .map(|(index, &m_over_n)| SweepPoint { index, snr_db: cfg.fixed_snr_db, m_over_n, l_paths: cfg.l_paths })
            .collect(),
        SweepKind::Paths => cfg
            .path_grid
            .iter()
            .enumerate()
            .map(|(index, &l_paths)| SweepPoint {
                index,
                snr_db: cfg.fixed_snr_db,
                m_over_n: cfg.fixed_m_over_n,
                l_paths,
            })
            .collect(),
    }
}

/// Flat per-trial CSV record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub config_hash: String,
    pub sweep: String,
    pub point_index: usize,
    pub snr_db: f64,
    pub m_over_n: f64,
    pub m_pilots: usize,
    pub l_paths: usize,
    pub method: String,
    pub trial_id: usize,
    pub scene_seed: u64,
    pub sensing_seed: u64,
    pub noise_seed: u64,
    pub nmse: f64,
    pub rho_db: f64,
    pub rho_linear: f64,
    pub rho_floored: bool,
    pub failed: bool,
    pub lambda1: f64,
    pub lambda_tv: f64,
    pub top_k: usize,
    pub dilation_y: usize,
    pub dilation_z: usize,
    pub lasso_iterations: usize,
    pub lasso_converged: bool,
    pub kkt_residual: f64,
    pub tv_iterations: usize,
    pub tv_converged: bool,
    pub support_size: usize,
    pub error: String,
}

impl TrialRow {
    fn from_result(r: &TrialResult, kind: SweepKind, hash: &str) -> Self {
        let est = r.estimator.as_ref();
        let diag = r.diagnostics.as_ref();
        let lasso = diag.and_then(|d| d.lasso.as_ref());
        let tv = diag.and_then(|d| d.tv.as_ref());
        Self {
            config_hash: hash.to_string(),
            sweep: kind.name().to_string(),
            point_index: r.point_index,
            snr_db: r.snr_db,
            m_over_n: r.m_over_n,
            m_pilots: r.m_pilots,
            l_paths: r.l_paths,
            method: r.method.name().to_string(),
            trial_id: r.trial_id,
            scene_seed: r.seeds.scene,
            sensing_seed: r.seeds.sensing,
            noise_seed: r.seeds.noise,
            nmse: r.nmse,
            rho_db: r.rho_db,
            rho_linear: r.rho_linear,
            rho_floored: r.rho_floored,
            failed: r.failed,
            lambda1: est.map_or(f64::NAN, |e| e.lambda1),
            lambda_tv: est.map_or(f64::NAN, |e| e.lambda_tv),
            top_k: est.map_or(0, |e| e.top_k),
            dilation_y: est.map_or(0, |e| e.dilation_y),
            dilation_z: est.map_or(0, |e| e.dilation_z),
            lasso_iterations: lasso.map_or(0, |l| l.iterations),
            lasso_converged: lasso.is_some_and(|l| l.converged),
            kkt_residual: lasso.map_or(f64::NAN, |l| l.kkt_residual),
            tv_iterations: tv.map_or(0, |t| t.iterations),
            tv_converged: tv.is_some_and(|t| t.converged),
            support_size: diag.and_then(|d| d.support_size).unwrap_or(0),
            error: r.error.clone().unwrap_or_default(),
        }
    }
}

/// Aggregate over trials at one (point, method).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config_hash: String,
    pub sweep: String,
    pub point_index: usize,
    pub snr_db: f64,
    pub m_over_n: f64,
    pub l_paths: usize,
    pub method: String,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean_nmse: f64,
    pub median_nmse: f64,
    pub mean_nmse_db: f64,
    pub mean_rho_db: f64,
    pub median_rho_db: f64,
    pub mean_rho_linear: f64,
    pub rho_floored: usize,
}

pub struct SweepOutput {
    pub kind: SweepKind,
    pub config_hash: String,
    pub threads: usize,
    pub results: Vec<TrialResult>,
    pub rows: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
}

impl SweepOutput {
    pub fn failed_trials(&self) -> usize {
        self.results.iter().filter(|r| r.failed).count()
    }

    pub fn failure_fraction(&self) -> f64 {
        if self.results.is_empty() {
            0.0
        } else {
            self.failed_trials() as f64 / self.results.len() as f64
        }
    }

    /// Summary row for a point index and method.
    pub fn summary_for(&self, point_index: usize, method: Method) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.point_index == point_index && s.method == method.name())
    }

    pub fn trials_csv(&self) -> Result<String> {
        to_csv(&self.rows)
    }

    pub fn summary_csv(&self) -> Result<String> {
        to_csv(&self.summary)
    }

    /// Write `trials.csv`, `summary.csv` and `config.resolved.json`.
    pub fn write(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let write = |name: &str, text: String| -> Result<()> {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(p.display().to_string(), e))
        };
        write("trials.csv", self.trials_csv()?)?;
        write("summary.csv", self.summary_csv()?)?;
        let resolved = serde_json::json!({
            "config": cfg,
            "config_hash": self.config_hash,
            "sweep": self.kind.name(),
            "threads": self.threads,
            "trials_run": self.results.len(),
            "trials_failed": self.failed_trials(),
        });
        write("config.resolved.json", serde_json::to_string_pretty(&resolved)? + "\n")
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("CSV buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Numerical(format!("CSV encoding: {e}")))
}

fn method_rank(cfg: &ExperimentConfig, m: Method) -> usize {
    cfg.methods.iter().position(|&x| x == m).unwrap_or(usize::MAX)
}

/// Run all trials of a sweep on a pool of `threads` workers (0 = rayon's
/// default). Output is sorted by (point, method, trial) regardless of
/// scheduling.
pub fn run_sweep(cfg: &ExperimentConfig, kind: SweepKind, threads: usize) -> Result<SweepOutput> {
    let ctx = TrialContext::new(cfg)?;
    let points = sweep_points(cfg, kind);
    let hash = cfg.hash();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let threads_used = pool.current_num_threads();

    for p in &points {
        ctx.expected_sparsity(p.l_paths)?;
    }
    let jobs: Vec<(SweepPoint, usize)> = points.iter().flat_map(|p| (0..cfg.n_trials).map(move |t| (*p, t))).collect();
    let mut results: Vec<TrialResult> =
        pool.install(|| jobs.par_iter().flat_map_iter(|(p, t)| ctx.run(p, *t, &cfg.methods)).collect());
    results.sort_by_key(|r| (r.point_index, method_rank(cfg, r.method), r.trial_id));

    let rows = results.iter().map(|r| TrialRow::from_result(r, kind, &hash)).collect();
    let mut summary = Vec::new();
    for p in &points {
        for &m in &cfg.methods {
            let sel: Vec<&TrialResult> = results.iter().filter(|r| r.point_index == p.index && r.method == m).collect();
            let ok: Vec<&TrialResult> = sel.iter().copied().filter(|r| !r.failed).collect();
            let nmse: Vec<f64> = ok.iter().map(|r| r.nmse).collect();
            let rho: Vec<f64> = ok.iter().map(|r| r.rho_db).collect();
            let rho_lin: Vec<f64> = ok.iter().map(|r| r.rho_linear).collect();
            let mean_nmse = mean(&nmse);
            summary.push(SummaryRow {
                config_hash: hash.clone(),
                sweep: kind.name().into(),
                point_index: p.index,
                snr_db: p.snr_db,
                m_over_n: p.m_over_n,
                l_paths: p.l_paths,
                method: m.name().into(),
                n_ok: ok.len(),
                n_failed: sel.len() - ok.len(),
                mean_nmse,
                median_nmse: median(&nmse),
                mean_nmse_db: 10.0 * mean_nmse.log10(),
                mean_rho_db: mean(&rho),
                median_rho_db: median(&rho),
                mean_rho_linear: mean(&rho_lin),
                rho_floored: ok.iter().filter(|r| r.rho_floored).count(),
            });
        }
    }
    Ok(SweepOutput { kind, config_hash: hash, threads: threads_used, results, rows, summary })
}
