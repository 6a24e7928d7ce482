//! Monte Carlo experiments: configuration, paired trials, sweeps and
//! figure export.

pub mod config;
pub mod figure;
pub mod metrics;
pub mod sweep;
pub mod trial;

pub use config::{EstimatorSettings, ExperimentConfig, GeometryConfig, Profile, DEFAULT_MASTER_SEED};
pub use figure::{emit_beamspace_figure, heatmap_svg};
pub use metrics::{compute_nmse, compute_rho_db, compute_rho_linear, mean, median, RHO_FLOOR_DB};
pub use sweep::{run_sweep, sweep_points, SummaryRow, SweepKind, SweepOutput, TrialRow};
pub use trial::{m_pilots_for, resolve_dilation, run_trial, SweepPoint, TrialContext, TrialResult, TrialSeeds};
