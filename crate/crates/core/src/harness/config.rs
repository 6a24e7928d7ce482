//! Experiment configuration: built-in profiles, JSON overlay, validation
//! and the content hash stamped into every result row.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::channel::{RangeSpec, SceneDistribution};
use crate::error::{Error, Result};
use crate::estimator::{IterControl, Method, TvNeighborRule};
use crate::geometry::{ArrayGeometry, DistanceConvention, DEFAULT_FRESNEL_COEFF};

pub const DEFAULT_MASTER_SEED: u64 = 20_240_917;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Desk,
    Paper,
}

impl Profile {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::config(format!("unknown profile '{other}' (expected desk or paper)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub n_y: usize,
    pub n_z: usize,
    pub carrier_freq_hz: f64,
    pub fresnel_coeff: f64,
}

impl GeometryConfig {
    pub fn build(&self) -> Result<ArrayGeometry> {
        let conv = DistanceConvention { fresnel_coeff: self.fresnel_coeff, ..DistanceConvention::default() };
        ArrayGeometry::with_convention(self.n_y, self.n_z, self.carrier_freq_hz, conv)
    }
}

/// Rules that turn a trial's noise level and the scene statistics into
/// concrete estimator hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    /// `λ1 = c1 σ sqrt(2 ln N)`.
    pub c1: f64,
    /// `λ_TV = lambda_tv_ratio * λ1`.
    pub lambda_tv_ratio: f64,
    /// Fixed support size; when absent, `ceil(top_k_factor * E[K])`.
    pub top_k: Option<usize>,
    pub top_k_factor: f64,
    /// Fixed dilation radii; when absent, `max(1, ceil(B / (2Δ)))` at the
    /// mean scene point.
    pub dilation_y: Option<usize>,
    pub dilation_z: Option<usize>,
    /// `λ1` for noiseless trials, as a fraction of `‖Φ^H y‖_∞`.
    pub noiseless_lambda_fraction: f64,
    pub lasso: IterControl,
    pub tv: IterControl,
    pub dykstra_sweeps: usize,
    pub neighbor_rule: TvNeighborRule,
    pub l2_loading: f64,
    pub sparsity_mc_samples: usize,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            c1: 1.0,
            lambda_tv_ratio: 0.25,
            top_k: None,
            top_k_factor: 2.0,
            dilation_y: None,
            dilation_z: None,
            noiseless_lambda_fraction: 1e-3,
            lasso: IterControl { max_iters: 500, tol: 1e-6 },
            tv: IterControl { max_iters: 200, tol: 1e-6 },
            dykstra_sweeps: 3,
            neighbor_rule: TvNeighborRule::BothEndpoints,
            l2_loading: 1e-10,
            sparsity_mc_samples: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub profile: Profile,
    pub geometry: GeometryConfig,
    pub scene: SceneDistribution,
    /// Path count for the SNR and measurement sweeps.
    pub l_paths: usize,
    pub n_trials: usize,
    pub snr_grid_db: Vec<f64>,
    pub measurement_factors: Vec<f64>,
    pub path_grid: Vec<usize>,
    /// SNR held fixed by the measurement and path sweeps.
    pub fixed_snr_db: f64,
    /// `M/N` held fixed by the SNR and path sweeps.
    pub fixed_m_over_n: f64,
    pub methods: Vec<Method>,
    pub estimator: EstimatorSettings,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// 32x8 array, short-range scenes, 50 trials. Estimator settings are
    /// tuned for this scale: the lobes span about three cells along y and
    /// less than one along z.
    pub fn desk() -> Self {
        Self {
            profile: Profile::Desk,
            geometry: GeometryConfig { n_y: 32, n_z: 8, carrier_freq_hz: 28e9, fresnel_coeff: DEFAULT_FRESNEL_COEFF },
            scene: SceneDistribution {
                v_range: (-0.5, 0.5),
                s_range: (-0.5, 0.5),
                range: RangeSpec::Relative { fresnel_multiple: 1.0, rayleigh_fraction: 0.2 },
            },
            l_paths: 3,
            n_trials: 50,
            snr_grid_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0],
            measurement_factors: vec![0.25, 0.35, 0.5],
            path_grid: vec![1, 3, 5, 7],
            fixed_snr_db: 10.0,
            fixed_m_over_n: 0.35,
            methods: Method::ALL.to_vec(),
            estimator: EstimatorSettings {
                c1: 0.45,
                top_k_factor: 3.5,
                dilation_y: Some(1),
                dilation_z: Some(0),
                neighbor_rule: TvNeighborRule::AnyEndpoint,
                ..EstimatorSettings::default()
            },
            master_seed: DEFAULT_MASTER_SEED,
            output_dir: PathBuf::from("out"),
        }
    }

    /// 128x16 array at 28 GHz, `r ~ U[r_F, r_R/20]`, 500 trials.
    pub fn paper() -> Self {
        Self {
            profile: Profile::Paper,
            geometry: GeometryConfig { n_y: 128, n_z: 16, carrier_freq_hz: 28e9, fresnel_coeff: DEFAULT_FRESNEL_COEFF },
            scene: SceneDistribution::standard(),
            l_paths: 5,
            n_trials: 500,
            snr_grid_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0],
            measurement_factors: vec![0.25, 0.3, 0.35, 0.4, 0.45, 0.5],
            path_grid: vec![1, 3, 5, 7],
            fixed_snr_db: 10.0,
            fixed_m_over_n: 0.35,
            methods: Method::ALL.to_vec(),
            estimator: EstimatorSettings::default(),
            master_seed: DEFAULT_MASTER_SEED,
            output_dir: PathBuf::from("out"),
        }
    }

    pub fn for_profile(p: Profile) -> Self {
        match p {
            Profile::Desk => Self::desk(),
            Profile::Paper => Self::paper(),
        }
    }

    /// Profile defaults overlaid with a (possibly partial) JSON document.
    /// A `profile` key in the document selects the base when `base` is `None`.
    pub fn from_json_overlay(base: Option<Profile>, doc: &str) -> Result<Self> {
        let overlay: Value = serde_json::from_str(doc).map_err(|e| Error::config(format!("config JSON: {e}")))?;
        let profile = match (base, overlay.get("profile")) {
            (Some(p), _) => p,
            (None, Some(v)) => serde_json::from_value(v.clone()).map_err(|e| Error::config(format!("profile: {e}")))?,
            (None, None) => Profile::Desk,
        };
        let mut merged = serde_json::to_value(Self::for_profile(profile))?;
        merge(&mut merged, overlay);
        if let Value::Object(map) = &mut merged {
            map.insert("profile".into(), serde_json::to_value(profile)?);
        }
        serde_json::from_value(merged).map_err(|e| Error::config(format!("config: {e}")))
    }

    pub fn load(base: Option<Profile>, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json_overlay(base, &text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let geom = self.geometry.build().map_err(|e| Error::config(format!("geometry: {e}")))?;
        self.scene.validate().map_err(|e| Error::config(format!("scene: {e}")))?;
        self.scene.range_bounds(&geom).map_err(|e| Error::config(format!("scene: {e}")))?;
        if self.l_paths < 1 {
            return bad("l_paths must be >= 1".into());
        }
        if self.n_trials < 1 {
            return bad("n_trials must be >= 1".into());
        }
        if self.snr_grid_db.is_empty() || self.measurement_factors.is_empty() || self.path_grid.is_empty() {
            return bad("sweep grids must be nonempty".into());
        }
        if self.snr_grid_db.iter().chain([&self.fixed_snr_db]).any(|s| s.is_nan()) {
            return bad("SNR values must not be NaN".into());
        }
        for &f in self.measurement_factors.iter().chain([&self.fixed_m_over_n]) {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("measurement factor {f} outside (0, 1]"));
            }
        }
        if self.path_grid.contains(&0) {
            return bad("path counts must be >= 1".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        let e = &self.estimator;
        if !(e.c1 > 0.0 && e.c1.is_finite()) || !(e.lambda_tv_ratio >= 0.0 && e.lambda_tv_ratio.is_finite()) {
            return bad("c1 must be positive and lambda_tv_ratio non-negative".into());
        }
        if !(e.top_k_factor > 0.0) || e.top_k == Some(0) || e.top_k.is_some_and(|k| k > geom.n_total()) {
            return bad("top-k rule out of range".into());
        }
        if !(e.noiseless_lambda_fraction > 0.0 && e.noiseless_lambda_fraction < 1.0) {
            return bad("noiseless_lambda_fraction must lie in (0, 1)".into());
        }
        if e.sparsity_mc_samples == 0 || e.dykstra_sweeps == 0 {
            return bad("sparsity_mc_samples and dykstra_sweeps must be >= 1".into());
        }
        for (name, c) in [("lasso", e.lasso), ("tv", e.tv)] {
            if c.max_iters == 0 || !(c.tol > 0.0) {
                return bad(format!("{name}: max_iters >= 1 and tol > 0 required"));
            }
        }
        if !(e.l2_loading >= 0.0 && e.l2_loading.is_finite()) {
            return bad("l2_loading must be finite and >= 0".into());
        }
        Ok(())
    }

    /// Hex SHA-256 prefix of the canonical JSON of every field that affects
    /// results (the output directory is excluded).
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut v {
            map.remove("output_dir");
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_validate() {
        ExperimentConfig::desk().validate().unwrap();
        ExperimentConfig::paper().validate().unwrap();
    }

    #[test]
    fn overlay_changes_only_named_fields() {
        let cfg = ExperimentConfig::from_json_overlay(
            Some(Profile::Desk),
            r#"{"n_trials": 7, "estimator": {"c1": 0.5}, "geometry": {"n_y": 16}}"#,
        )
        .unwrap();
        let base = ExperimentConfig::desk();
        assert_eq!(cfg.n_trials, 7);
        assert_eq!(cfg.estimator.c1, 0.5);
        assert_eq!(cfg.estimator.lambda_tv_ratio, base.estimator.lambda_tv_ratio);
        assert_eq!(cfg.geometry.n_y, 16);
        assert_eq!(cfg.geometry.n_z, base.geometry.n_z);
    }

    #[test]
    fn overlay_profile_key_selects_base() {
        let cfg = ExperimentConfig::from_json_overlay(None, r#"{"profile": "paper"}"#).unwrap();
        assert_eq!(cfg, ExperimentConfig::paper());
    }

    #[test]
    fn bad_documents_are_config_errors() {
        assert!(matches!(ExperimentConfig::from_json_overlay(None, "{"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_json_overlay(None, r#"{"n_trials": "many"}"#), Err(Error::Config(_))));
    }

    #[test]
    fn validation_rejects_bad_grids() {
        let mut c = ExperimentConfig::desk();
        c.measurement_factors = vec![0.0];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::desk();
        c.snr_grid_db.clear();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::desk();
        c.n_trials = 0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::desk();
        c.scene.range = RangeSpec::Relative { fresnel_multiple: 1.0, rayleigh_fraction: 0.05 };
        assert!(c.validate().is_err(), "empty near-field interval for the desk array");
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::desk();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.master_seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn json_round_trip() {
        let c = ExperimentConfig::paper();
        let back: ExperimentConfig = serde_json::from_str(&c.to_json_pretty().unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
