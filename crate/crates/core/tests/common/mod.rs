#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nfbeam::Complex64;

/// 1D TV prox by enumerating the dual active sets.
///
/// The dual of `min 1/2 ‖z - x‖^2 + tau ‖D z‖_1` is a box-constrained QP in
/// `u` with `z = x - D^T u`. Each dual coordinate is either at `-tau`, at
/// `+tau` or free; for every assignment the free part solves a linear
/// system, and the assignment satisfying all KKT conditions gives the
/// unique primal solution.
pub fn tv_prox_oracle(x: &[f64], tau: f64) -> Vec<f64> {
    let n = x.len();
    if n <= 1 {
        return x.to_vec();
    }
    let m = n - 1;
    // (D z)_t = z_{t+1} - z_t
    let d = DMatrix::from_fn(m, n, |r, c| {
        if c == r + 1 {
            1.0
        } else if c == r {
            -1.0
        } else {
            0.0
        }
    });
    let xv = DVector::from_column_slice(x);
    let total = 3usize.pow(m as u32);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..total {
        let mut state = vec![0u8; m];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == 2).collect();
        let mut u = DVector::zeros(m);
        for i in 0..m {
            match state[i] {
                0 => u[i] = -tau,
                1 => u[i] = tau,
                _ => {}
            }
        }
        if !free.is_empty() {
            let df = d.select_rows(free.iter());
            let rhs = &df * (&xv - d.transpose() * &u);
            let lhs = &df * df.transpose();
            let Some(sol) = lhs.lu().solve(&rhs) else { continue };
            for (k, &i) in free.iter().enumerate() {
                u[i] = sol[k];
            }
        }
        let z = &xv - d.transpose() * &u;
        let dz = &d * &z;
        let tol = 1e-9 * (1.0 + tau);
        let feasible = (0..m).all(|i| match state[i] {
            0 => dz[i] <= tol,
            1 => dz[i] >= -tol,
            _ => u[i].abs() <= tau + tol,
        });
        if feasible {
            let obj = 0.5 * (&z - &xv).norm_squared() + tau * dz.iter().map(|v| v.abs()).sum::<f64>();
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, z.as_slice().to_vec()));
            }
        }
    }
    best.expect("some dual assignment satisfies KKT").1
}

pub fn lasso_objective(a: &DMatrix<Complex64>, y: &[Complex64], s: &[Complex64], lambda: f64) -> f64 {
    let r = DVector::from_column_slice(y) - a * DVector::from_column_slice(s);
    0.5 * r.norm_squared() + lambda * s.iter().map(|z| z.norm()).sum::<f64>()
}

/// Cyclic coordinate descent for the complex LASSO, run to a tight fixed
/// point.
pub fn lasso_cd_oracle(a: &DMatrix<Complex64>, y: &[Complex64], lambda: f64) -> Vec<Complex64> {
    let n = a.ncols();
    let col_sq: Vec<f64> = (0..n).map(|j| a.column(j).norm_squared()).collect();
    let mut s = vec![Complex64::new(0.0, 0.0); n];
    let mut r = DVector::from_column_slice(y);
    for _sweep in 0..200_000 {
        let mut delta = 0.0f64;
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = a.column(j);
            let rho = col.dotc(&r) + s[j] * col_sq[j];
            let mag = rho.norm();
            let new = if mag <= lambda { Complex64::new(0.0, 0.0) } else { rho * ((mag - lambda) / (mag * col_sq[j])) };
            let diff = new - s[j];
            if diff != Complex64::new(0.0, 0.0) {
                r -= col * diff;
                delta = delta.max(diff.norm());
                s[j] = new;
            }
        }
        if delta < 1e-15 {
            break;
        }
    }
    s
}

pub fn random_complex_matrix(m: usize, n: usize, var: f64, seed: u64) -> DMatrix<Complex64> {
    let mut r = nfbeam::rng::stream(seed);
    DMatrix::from_fn(m, n, |_, _| nfbeam::rng::complex_gaussian(&mut r, var))
}

pub fn random_complex_vec(n: usize, var: f64, seed: u64) -> Vec<Complex64> {
    let mut r = nfbeam::rng::stream(seed);
    (0..n).map(|_| nfbeam::rng::complex_gaussian(&mut r, var)).collect()
}
