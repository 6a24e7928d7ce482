//! Stage I: complex LASSO `min 1/2 ‖y - Φ s‖^2 + λ ‖s‖_1` by accelerated
//! proximal gradient with function-value restart.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::prox::soft_threshold_complex;
use crate::rng;

/// Solver controls shared by the iterative stages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterControl {
    pub max_iters: usize,
    /// Stop when the relative objective decrease of one step drops below this.
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoDiagnostics {
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub kkt_residual: f64,
    pub lipschitz: f64,
    pub restarts: usize,
    pub nonzeros: usize,
}

#[derive(Clone, Debug)]
pub struct LassoSolution {
    pub s: Vec<Complex64>,
    pub diagnostics: LassoDiagnostics,
}

/// Estimate of `‖A‖_2^2` by power iteration on `A^H A` from a fixed start.
pub fn spectral_norm_sq(a: &DMatrix<Complex64>, iters: usize) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut r = rng::stream(0x05ee_d0f9_03e5);
    let mut x = DVector::from_fn(n, |_, _| rng::complex_gaussian(&mut r, 1.0));
    let mut est = 0.0;
    for _ in 0..iters.max(1) {
        let nx = x.norm();
        if nx == 0.0 {
            return 0.0;
        }
        x /= Complex64::new(nx, 0.0);
        let ax = a * &x;
        est = ax.norm_squared();
        x = a.ad_mul(&ax);
    }
    est
}

pub fn lasso_objective(a: &DMatrix<Complex64>, y: &DVector<Complex64>, s: &DVector<Complex64>, lambda: f64) -> f64 {
    let r = y - a * s;
    0.5 * r.norm_squared() + lambda * s.iter().map(|z| z.norm()).sum::<f64>()
}

/// Largest violation of the LASSO optimality conditions at `s`.
///
/// With `g = Φ^H (y - Φ s)`: `|g_i - λ s_i/|s_i||` on the support and
/// `max(|g_i| - λ, 0)` off it.
pub fn kkt_residual(a: &DMatrix<Complex64>, y: &DVector<Complex64>, s: &DVector<Complex64>, lambda: f64) -> f64 {
    let g = a.ad_mul(&(y - a * s));
    g.iter()
        .zip(s.iter())
        .map(|(gi, si)| {
            let m = si.norm();
            if m > 0.0 {
                (gi - si * (lambda / m)).norm()
            } else {
                (gi.norm() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Solve the complex LASSO from a zero start.
pub fn solve_lasso(a: &DMatrix<Complex64>, y: &[Complex64], lambda: f64, ctl: IterControl) -> LassoSolution {
    let n = a.ncols();
    let yv = DVector::from_column_slice(y);
    let lip = 1.01 * spectral_norm_sq(a, 50);
    let mut x = DVector::<Complex64>::zeros(n);
    let mut f_prev = lasso_objective(a, &yv, &x, lambda);
    let mut diag = LassoDiagnostics {
        lambda,
        iterations: 0,
        converged: false,
        objective: f_prev,
        kkt_residual: 0.0,
        lipschitz: lip,
        restarts: 0,
        nonzeros: 0,
    };
    // zero is optimal exactly when no correlation exceeds lambda
    let at_y_max = a.ad_mul(&yv).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if lip == 0.0 || at_y_max <= lambda {
        diag.converged = true;
        diag.kkt_residual = kkt_residual(a, &yv, &x, lambda);
        return LassoSolution { s: x.as_slice().to_vec(), diagnostics: diag };
    }
    let step = 1.0 / lip;
    let mut z = x.clone();
    let mut theta = 1.0f64;
    for it in 1..=ctl.max_iters {
        diag.iterations = it;
        let grad = a.ad_mul(&(a * &z - &yv));
        let x_new = (&z - grad * Complex64::new(step, 0.0)).map(|c| soft_threshold_complex(c, step * lambda));
        let f_new = lasso_objective(a, &yv, &x_new, lambda);
        if f_new > f_prev {
            // momentum overshoot: restart from the last accepted point
            diag.restarts += 1;
            theta = 1.0;
            z = x.clone();
            continue;
        }
        let theta_new = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = Complex64::new((theta - 1.0) / theta_new, 0.0);
        z = &x_new + (&x_new - &x) * beta;
        let rel = (f_prev - f_new) / f_prev.max(f64::MIN_POSITIVE);
        x = x_new;
        f_prev = f_new;
        theta = theta_new;
        if rel < ctl.tol {
            diag.converged = true;
            break;
        }
    }
    diag.objective = f_prev;
    diag.kkt_residual = kkt_residual(a, &yv, &x, lambda);
    diag.nonzeros = x.iter().filter(|c| c.norm() > 0.0).count();
    LassoSolution { s: x.as_slice().to_vec(), diagnostics: diag }
}
