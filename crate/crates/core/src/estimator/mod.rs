//! Compressive channel estimation from masked pilots.
//!
//! Three estimators share one measurement model:
//! * `L2`: minimum-norm least squares,
//! * `LASSO`: complex ℓ1-regularized least squares,
//! * `LASSO_TV`: LASSO, then a top-k support dilated to cover lobe width,
//!   then magnitude total-variation refinement on that support.

pub mod lasso;
pub mod mask;
pub mod prox;
mod recover;
pub mod sensing;
pub mod tv_refine;

pub use lasso::{kkt_residual, lasso_objective, solve_lasso, spectral_norm_sq, IterControl, LassoDiagnostics};
pub use mask::{dilate_mask, topk_mask, SupportMask};
pub use prox::{soft_threshold_complex, tv_1d, tv_prox_1d, MaskedTv, TvNeighborRule};
pub use recover::{
    estimate_channel, estimate_methods, min_norm_solution, Diagnostics, Estimate, EstimatorConfig, Method,
};
pub use sensing::{make_sensing, measure, noise_variance, MeasurementVector, SensingOperator};
pub use tv_refine::{refine, TvDiagnostics, TvProblem};
