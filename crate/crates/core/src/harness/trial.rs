//! One Monte Carlo realization: scene, channel, pilots, noise, estimates.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::metrics::{compute_nmse, compute_rho_db, compute_rho_linear, RHO_FLOOR_DB};
use crate::beamspace::{lobe_width_closed_form, Axis, BeamspaceMatrix, DftCodebook};
use crate::channel::{sample_scene, synthesize_channel, ChannelVector, Scene, SphericalPoint};
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_methods, make_sensing, measure, Estimate, EstimatorConfig, MeasurementVector, Method, SensingOperator,
};
use crate::geometry::ArrayGeometry;
use crate::rng::derive_seed;

/// One cell of a sweep grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub snr_db: f64,
    pub m_over_n: f64,
    pub l_paths: usize,
}

/// Child seeds of one trial. The scene depends only on `(trial, L)`, the
/// operator and noise only on `(trial, M)`, so every method and every SNR
/// of a trial sees the same realization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub scene: u64,
    pub sensing: u64,
    pub noise: u64,
}

impl TrialSeeds {
    pub fn derive(master: u64, trial: usize, l_paths: usize, m_pilots: usize) -> Self {
        let t = trial as u64;
        Self {
            scene: derive_seed(master, "scene", &[t, l_paths as u64]),
            sensing: derive_seed(master, "sensing", &[t, m_pilots as u64]),
            noise: derive_seed(master, "noise", &[t, m_pilots as u64]),
        }
    }
}

pub fn m_pilots_for(n: usize, m_over_n: f64) -> usize {
    ((m_over_n * n as f64).round() as usize).clamp(1, n)
}

/// Result of one method on one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_id: usize,
    pub point_index: usize,
    pub method: Method,
    pub snr_db: f64,
    pub m_over_n: f64,
    pub m_pilots: usize,
    pub l_paths: usize,
    pub seeds: TrialSeeds,
    pub nmse: f64,
    pub rho_db: f64,
    pub rho_linear: f64,
    pub rho_floored: bool,
    pub failed: bool,
    pub error: Option<String>,
    pub estimator: Option<EstimatorConfig>,
    pub diagnostics: Option<crate::estimator::Diagnostics>,
}

/// Everything shared by the trials of one sweep.
pub struct TrialContext {
    pub cfg: ExperimentConfig,
    pub geom: ArrayGeometry,
    pub book: DftCodebook,
    pub dilation: (usize, usize),
    sparsity: Mutex<BTreeMap<usize, f64>>,
}

/// Everything a trial produced, kept for figure export and verbose runs.
pub struct TrialArtifacts {
    pub scene: Scene,
    pub h: ChannelVector,
    pub s_true: BeamspaceMatrix,
    pub op: SensingOperator,
    pub y: MeasurementVector,
    pub estimates: Vec<Estimate>,
    pub estimator: EstimatorConfig,
}

impl TrialContext {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let geom = cfg.geometry.build()?;
        let book = DftCodebook::new(&geom);
        let dilation = resolve_dilation(cfg, &geom, &book)?;
        Ok(Self { cfg: cfg.clone(), geom, book, dilation, sparsity: Mutex::new(BTreeMap::new()) })
    }

    /// Monte Carlo `E[K]` for a path count, cached.
    pub fn expected_sparsity(&self, l_paths: usize) -> Result<f64> {
        if let Some(&k) = self.sparsity.lock().expect("sparsity cache").get(&l_paths) {
            return Ok(k);
        }
        let seed = derive_seed(self.cfg.master_seed, "sparsity", &[l_paths as u64]);
        let k = crate::beamspace::expected_sparsity(
            &self.geom,
            &self.book,
            l_paths,
            &self.cfg.scene,
            self.cfg.estimator.sparsity_mc_samples,
            seed,
        )?;
        self.sparsity.lock().expect("sparsity cache").insert(l_paths, k);
        Ok(k)
    }

    /// Concrete estimator settings for one measurement.
    pub fn estimator_config(
        &self,
        op: &SensingOperator,
        y: &MeasurementVector,
        l_paths: usize,
    ) -> Result<EstimatorConfig> {
        let e = &self.cfg.estimator;
        let n = self.geom.n_total();
        let lambda1 = if y.noise_var > 0.0 {
            e.c1 * y.noise_var.sqrt() * (2.0 * (n as f64).ln()).sqrt()
        } else {
            let aty = op.apply_adjoint(&y.y)?;
            e.noiseless_lambda_fraction * aty.iter().map(|z| z.norm()).fold(0.0, f64::max)
        };
        let top_k = match e.top_k {
            Some(k) => k,
            None => ((e.top_k_factor * self.expected_sparsity(l_paths)?).ceil() as usize).clamp(1, n),
        };
        Ok(EstimatorConfig {
            lambda1,
            lambda_tv: e.lambda_tv_ratio * lambda1,
            top_k,
            dilation_y: self.dilation.0,
            dilation_z: self.dilation.1,
            lasso: e.lasso,
            tv: e.tv,
            dykstra_sweeps: e.dykstra_sweeps,
            neighbor_rule: e.neighbor_rule,
            l2_loading: e.l2_loading,
        })
    }

    /// Run every method on one realization and keep the intermediate objects.
    pub fn run_artifacts(
        &self,
        point: &SweepPoint,
        trial: usize,
        methods: &[Method],
    ) -> Result<(TrialSeeds, TrialArtifacts)> {
        let n = self.geom.n_total();
        let m = m_pilots_for(n, point.m_over_n);
        let seeds = TrialSeeds::derive(self.cfg.master_seed, trial, point.l_paths, m);
        let scene = sample_scene(&self.geom, point.l_paths, seeds.scene, &self.cfg.scene)?;
        let h = synthesize_channel(&self.geom, &scene)?;
        let s_true = self.book.to_beamspace(&h)?;
        let op = make_sensing(&self.geom, m, seeds.sensing)?;
        let y = measure(&op, &s_true, point.snr_db, seeds.noise)?;
        let estimator = self.estimator_config(&op, &y, point.l_paths)?;
        let estimates = estimate_methods(&self.book, &op, &y.y, &estimator, methods)?;
        Ok((seeds, TrialArtifacts { scene, h, s_true, op, y, estimates, estimator }))
    }

    /// Run every method on one realization; failures become flagged rows.
    pub fn run(&self, point: &SweepPoint, trial: usize, methods: &[Method]) -> Vec<TrialResult> {
        let m = m_pilots_for(self.geom.n_total(), point.m_over_n);
        let blank = |method: Method, seeds: TrialSeeds| TrialResult {
            trial_id: trial,
            point_index: point.index,
            method,
            snr_db: point.snr_db,
            m_over_n: point.m_over_n,
            m_pilots: m,
            l_paths: point.l_paths,
            seeds,
            nmse: f64::NAN,
            rho_db: f64::NAN,
            rho_linear: f64::NAN,
            rho_floored: false,
            failed: true,
            error: None,
            estimator: None,
            diagnostics: None,
        };
        match self.run_artifacts(point, trial, methods) {
            Ok((seeds, art)) => art
                .estimates
                .iter()
                .map(|est| {
                    let mut row = blank(est.method, seeds);
                    row.estimator = Some(art.estimator.clone());
                    row.diagnostics = Some(est.diagnostics.clone());
                    match score(est, &art.h) {
                        Ok((nmse, rho_db, rho_lin)) => {
                            row.nmse = nmse;
                            row.rho_db = rho_db;
                            row.rho_linear = rho_lin;
                            row.rho_floored = rho_db <= RHO_FLOOR_DB;
                            row.failed = false;
                        }
                        Err(e) => row.error = Some(e.to_string()),
                    }
                    row
                })
                .collect(),
            Err(e) => {
                let seeds = TrialSeeds::derive(self.cfg.master_seed, trial, point.l_paths, m);
                methods
                    .iter()
                    .map(|&method| {
                        let mut row = blank(method, seeds);
                        row.error = Some(e.to_string());
                        row
                    })
                    .collect()
            }
        }
    }
}

fn score(est: &Estimate, h: &ChannelVector) -> Result<(f64, f64, f64)> {
    let nmse = compute_nmse(&est.h_hat, h)?;
    if est.v_hat.is_none() {
        return Ok((nmse, RHO_FLOOR_DB, 0.0));
    }
    Ok((nmse, compute_rho_db(&est.h_hat, h)?, compute_rho_linear(&est.h_hat, h)?))
}

/// `max(1, ceil(B / (2Δ)))` per axis at the mean scene point, unless fixed.
pub fn resolve_dilation(cfg: &ExperimentConfig, geom: &ArrayGeometry, book: &DftCodebook) -> Result<(usize, usize)> {
    let (v, s, r) = cfg.scene.mean_point(geom)?;
    let p = SphericalPoint::from_vs(v, s, r)?;
    let radius = |axis: Axis, x: f64, delta: f64| -> Result<usize> {
        let b = lobe_width_closed_form(geom, axis, x, r)?;
        Ok(((b / (2.0 * delta)).ceil() as usize).max(1))
    };
    let ry = match cfg.estimator.dilation_y {
        Some(r) => r,
        None => radius(Axis::Y, p.u(), book.spacing_u())?,
    };
    let rz = match cfg.estimator.dilation_z {
        Some(r) => r,
        None => radius(Axis::Z, p.v(), book.spacing_v())?,
    };
    Ok((ry, rz))
}

/// Single-method convenience wrapper around [`TrialContext::run`].
pub fn run_trial(
    cfg: &ExperimentConfig,
    method: Method,
    snr_db: f64,
    m_over_n: f64,
    trial_index: usize,
) -> Result<TrialResult> {
    if snr_db.is_nan() || !(m_over_n > 0.0 && m_over_n <= 1.0) {
        return Err(Error::Config(format!("operating point (SNR {snr_db} dB, M/N {m_over_n}) is invalid")));
    }
    let ctx = TrialContext::new(cfg)?;
    let point = SweepPoint { index: 0, snr_db, m_over_n, l_paths: cfg.l_paths };
    ctx.run(&point, trial_index, &[method]).pop().ok_or_else(|| Error::Numerical("trial produced no rows".into()))
}
