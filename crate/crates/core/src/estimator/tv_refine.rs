//! Stage III: magnitude-TV refinement on a fixed support.
//!
//! Minimizes `1/2 ‖y - Φ_M s_M‖^2 + λ_TV · TV(|S|; M)` over coefficients
//! supported on the mask by proximal gradient. The prox of a function of
//! `|z|` acts on magnitudes and keeps phases, so each step is a gradient
//! step, a 2D TV prox on the magnitude map and a phase reattachment.
//! Backtracking keeps the objective non-increasing.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lasso::{spectral_norm_sq, IterControl};
use super::mask::SupportMask;
use super::prox::{MaskedTv, TvNeighborRule};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvDiagnostics {
    pub lambda_tv: f64,
    pub mask_size: usize,
    pub iterations: usize,
    pub converged: bool,
    pub initial_objective: f64,
    pub objective: f64,
    pub backtracks: usize,
    /// Set when a step could not decrease the objective after backtracking.
    pub stalled: bool,
}

pub struct TvProblem<'a> {
    pub phi: &'a DMatrix<Complex64>,
    pub y: &'a [Complex64],
    pub mask: &'a SupportMask,
    pub lambda_tv: f64,
    pub rule: TvNeighborRule,
    pub dykstra_sweeps: usize,
}

/// Refine `init` (full column-stacked grid) on the mask. Returns the full
/// grid with zeros off the mask.
pub fn refine(
    problem: &TvProblem<'_>,
    init: &[Complex64],
    ctl: IterControl,
) -> Result<(Vec<Complex64>, TvDiagnostics)> {
    let n = problem.phi.ncols();
    if init.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: init.len() });
    }
    if problem.mask.active().len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: problem.mask.active().len() });
    }
    let cols = problem.mask.indices();
    if cols.is_empty() {
        return Err(Error::EmptyMask);
    }
    let phi_m = problem.phi.select_columns(cols.iter());
    let yv = DVector::from_column_slice(problem.y);
    let tv = MaskedTv::new(problem.mask.active(), problem.mask.n_y(), problem.mask.n_z(), problem.rule);

    let mut full_mags = vec![0.0; n];
    let objective = |s: &DVector<Complex64>, mags: &mut [f64]| -> f64 {
        let r = &yv - &phi_m * s;
        for (k, &c) in cols.iter().enumerate() {
            mags[c] = s[k].norm();
        }
        0.5 * r.norm_squared() + problem.lambda_tv * tv.value(mags)
    };

    let mut s = DVector::from_iterator(cols.len(), cols.iter().map(|&c| init[c]));
    let mut f = objective(&s, &mut full_mags);
    let mut diag = TvDiagnostics {
        lambda_tv: problem.lambda_tv,
        mask_size: cols.len(),
        iterations: 0,
        converged: false,
        initial_objective: f,
        objective: f,
        backtracks: 0,
        stalled: false,
    };
    let lip = 1.01 * spectral_norm_sq(&phi_m, 50);
    if lip == 0.0 {
        diag.converged = true;
        return Ok((scatter(&s, &cols, n), diag));
    }
    let base_step = 1.0 / lip;
    let mut phases = vec![Complex64::new(1.0, 0.0); cols.len()];
    for it in 1..=ctl.max_iters {
        diag.iterations = it;
        let grad = phi_m.ad_mul(&(&phi_m * &s - &yv));
        let mut step = base_step;
        let mut accepted = None;
        for _ in 0..40 {
            let z = &s - &grad * Complex64::new(step, 0.0);
            for (k, &c) in cols.iter().enumerate() {
                let m = z[k].norm();
                full_mags[c] = m;
                phases[k] = if m > 0.0 {
                    z[k] / m
                } else if s[k].norm() > 0.0 {
                    s[k] / s[k].norm()
                } else {
                    Complex64::new(1.0, 0.0)
                };
            }
            let new_mags = tv.prox(&full_mags, step * problem.lambda_tv, problem.dykstra_sweeps);
            let cand =
                DVector::from_iterator(cols.len(), cols.iter().enumerate().map(|(k, &c)| phases[k] * new_mags[c]));
            let f_cand = objective(&cand, &mut full_mags);
            if f_cand <= f {
                accepted = Some((cand, f_cand));
                break;
            }
            diag.backtracks += 1;
            step *= 0.5;
        }
        let Some((cand, f_cand)) = accepted else {
            diag.stalled = true;
            diag.converged = true;
            break;
        };
        let rel = (f - f_cand) / f.max(f64::MIN_POSITIVE);
        s = cand;
        f = f_cand;
        if rel < ctl.tol {
            diag.converged = true;
            break;
        }
    }
    diag.objective = f;
    Ok((scatter(&s, &cols, n), diag))
}

fn scatter(s: &DVector<Complex64>, cols: &[usize], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (k, &c) in cols.iter().enumerate() {
        out[c] = s[k];
    }
    out
}
