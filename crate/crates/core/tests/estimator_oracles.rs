mod common;

use nalgebra::{DMatrix, DVector};
use nfbeam::beamspace::{BeamspaceMatrix, DftCodebook};
use nfbeam::estimator::{
    estimate_channel, estimate_methods, kkt_residual, refine, solve_lasso, EstimatorConfig, IterControl, Method,
    SensingOperator, SupportMask, TvNeighborRule, TvProblem,
};
use nfbeam::geometry::ArrayGeometry;
use nfbeam::Complex64;

use common::{lasso_cd_oracle, lasso_objective, random_complex_matrix, random_complex_vec};

const TIGHT: IterControl = IterControl { max_iters: 20_000, tol: 1e-14 };

fn adjoint_inf_norm(a: &DMatrix<Complex64>, y: &[Complex64]) -> f64 {
    (a.adjoint() * DVector::from_column_slice(y)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Least squares restricted to `cols` via the normal equations.
fn masked_ls(a: &DMatrix<Complex64>, y: &[Complex64], cols: &[usize]) -> Vec<Complex64> {
    let am = a.select_columns(cols.iter());
    let gram = am.adjoint() * &am;
    let rhs = am.adjoint() * DVector::from_column_slice(y);
    let x = gram.lu().solve(&rhs).expect("nonsingular Gram matrix");
    let mut full = vec![Complex64::new(0.0, 0.0); a.ncols()];
    for (k, &c) in cols.iter().enumerate() {
        full[c] = x[k];
    }
    full
}

fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

fn small_geometry(n_y: usize, n_z: usize) -> (ArrayGeometry, DftCodebook) {
    let g = ArrayGeometry::new(n_y, n_z, 28e9).unwrap();
    let b = DftCodebook::new(&g);
    (g, b)
}

#[test]
fn lasso_matches_coordinate_descent_on_tiny_instances() {
    for seed in 0..10u64 {
        let a = random_complex_matrix(8, 12, 1.0 / 12.0, 100 + seed);
        let y = random_complex_vec(8, 1.0, 200 + seed);
        let lambda = 0.1 * adjoint_inf_norm(&a, &y);
        let fista = solve_lasso(&a, &y, lambda, TIGHT);
        let cd = lasso_cd_oracle(&a, &y, lambda);
        let (f1, f2) = (lasso_objective(&a, &y, &fista.s, lambda), lasso_objective(&a, &y, &cd, lambda));
        assert!((f1 - f2).abs() <= 1e-6 * f2, "seed {seed}: {f1} vs {f2}");
        assert!(rel_err(&fista.s, &cd) < 1e-4, "seed {seed}");
    }
}

#[test]
fn lasso_zero_data_gives_zero() {
    let a = random_complex_matrix(8, 12, 1.0 / 12.0, 1);
    let y = vec![Complex64::new(0.0, 0.0); 8];
    let sol = solve_lasso(&a, &y, 0.3, IterControl { max_iters: 500, tol: 1e-6 });
    assert!(sol.s.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
}

#[test]
fn lasso_null_threshold() {
    let a = random_complex_matrix(10, 20, 1.0 / 20.0, 2);
    let y = random_complex_vec(10, 1.0, 3);
    let lam = adjoint_inf_norm(&a, &y);
    for scale in [1.0, 1.5, 10.0] {
        let sol = solve_lasso(&a, &y, scale * lam, IterControl { max_iters: 500, tol: 1e-6 });
        assert_eq!(sol.diagnostics.nonzeros, 0, "scale {scale}");
    }
}

#[test]
fn lasso_kkt_holds_over_random_instances() {
    for seed in 0..20u64 {
        let a = random_complex_matrix(16, 32, 1.0 / 32.0, 300 + seed);
        let y = random_complex_vec(16, 1.0, 400 + seed);
        let lambda = 0.05 * adjoint_inf_norm(&a, &y);
        let sol = solve_lasso(&a, &y, lambda, TIGHT);
        let k = kkt_residual(&a, &DVector::from_column_slice(&y), &DVector::from_column_slice(&sol.s), lambda);
        assert!(k < 1e-5, "seed {seed}: {k}");
        assert!(sol.diagnostics.converged);
    }
}

#[test]
fn tv_refine_without_penalty_is_masked_least_squares() {
    let a = random_complex_matrix(16, 32, 1.0 / 32.0, 7);
    let y = random_complex_vec(16, 1.0, 8);
    let mut active = vec![false; 32];
    for i in [1, 2, 3, 9, 10, 11, 17] {
        active[i] = true;
    }
    let mask = SupportMask::from_active(8, 4, active).unwrap();
    let want = masked_ls(&a, &y, &mask.indices());
    for rule in [TvNeighborRule::BothEndpoints, TvNeighborRule::AnyEndpoint] {
        let p = TvProblem { phi: &a, y: &y, mask: &mask, lambda_tv: 0.0, rule, dykstra_sweeps: 3 };
        let (got, diag) = refine(&p, &vec![Complex64::new(0.0, 0.0); 32], TIGHT).unwrap();
        assert!(rel_err(&got, &want) < 1e-6, "{rule:?}: {}", rel_err(&got, &want));
        assert!(diag.objective <= diag.initial_objective);
    }
}

#[test]
fn tv_refine_single_entry_is_scalar_least_squares() {
    let a = random_complex_matrix(12, 24, 1.0 / 24.0, 11);
    let y = random_complex_vec(12, 1.0, 12);
    let mut active = vec![false; 24];
    active[13] = true;
    let mask = SupportMask::from_active(6, 4, active).unwrap();
    let col = a.column(13);
    let want = col.dotc(&DVector::from_column_slice(&y)) / col.norm_squared();
    for rule in [TvNeighborRule::BothEndpoints, TvNeighborRule::AnyEndpoint] {
        let p = TvProblem { phi: &a, y: &y, mask: &mask, lambda_tv: 0.7, rule, dykstra_sweeps: 3 };
        let init = vec![Complex64::new(0.0, 0.0); 24];
        let (got, _) = refine(&p, &init, TIGHT).unwrap();
        if rule == TvNeighborRule::BothEndpoints {
            assert!((got[13] - want).norm() < 1e-8 * want.norm(), "{} vs {}", got[13], want);
        }
        assert!(got.iter().enumerate().all(|(i, z)| i == 13 || z.norm() == 0.0));
    }
}

#[test]
fn degenerate_three_stage_equals_masked_ls_on_lasso_support() {
    let (_, book) = small_geometry(8, 4);
    let n = 32;
    let phi = random_complex_matrix(20, n, 1.0 / n as f64, 21);
    let mut s = vec![Complex64::new(0.0, 0.0); n];
    for (i, v) in [(3, 1.0), (4, 0.8), (12, -0.6), (27, 0.5)] {
        s[i] = Complex64::new(v, 0.3 * v);
    }
    let y: Vec<Complex64> = (&phi * DVector::from_column_slice(&s)).iter().copied().collect();
    let op = SensingOperator::from_matrix(phi.clone(), 0);
    let cfg = EstimatorConfig {
        lambda1: 0.02 * adjoint_inf_norm(&phi, &y),
        lambda_tv: 0.0,
        top_k: n,
        dilation_y: 0,
        dilation_z: 0,
        lasso: TIGHT,
        tv: TIGHT,
        ..EstimatorConfig::default()
    };
    let out = estimate_methods(&book, &op, &y, &cfg, &[Method::Lasso, Method::LassoTv]).unwrap();
    let support: Vec<usize> = (0..n).filter(|&i| out[0].s_hat.as_slice()[i].norm() > 0.0).collect();
    assert!(!support.is_empty() && support.len() <= 20);
    let want = masked_ls(&phi, &y, &support);
    assert!(rel_err(out[1].s_hat.as_slice(), &want) < 1e-6);
    assert_eq!(out[1].diagnostics.support_size, Some(support.len()));
}

#[test]
fn l2_square_noiseless_inverts_exactly() {
    let (geom, book) = small_geometry(8, 4);
    let n = geom.n_total();
    let op = nfbeam::estimator::make_sensing(&geom, n, 5).unwrap();
    let s: Vec<Complex64> = random_complex_vec(n, 1.0, 6);
    let y = op.apply(&s).unwrap();
    let est = estimate_channel(&book, &op, &y, &EstimatorConfig::default(), Method::L2).unwrap();
    assert!(rel_err(est.s_hat.as_slice(), &s) < 1e-8);
    let h = book.from_beamspace(&BeamspaceMatrix::from_vec(8, 4, s).unwrap()).unwrap();
    let err: f64 = est.h_hat.entries().iter().zip(h.entries()).map(|(a, b)| (a - b).norm_sqr()).sum();
    assert!(err.sqrt() < 1e-8 * h.norm());
}

#[test]
fn estimates_are_equivariant_to_global_phase() {
    let (geom, book) = small_geometry(16, 4);
    let n = geom.n_total();
    let op = nfbeam::estimator::make_sensing(&geom, 28, 31).unwrap();
    let mut s = vec![Complex64::new(0.0, 0.0); n];
    for (i, mag) in [(5, 1.0), (6, 0.9), (7, 0.95), (40, 0.5), (41, 0.45)] {
        s[i] = Complex64::from_polar(mag, i as f64);
    }
    let mut y = op.apply(&s).unwrap();
    let noise = random_complex_vec(y.len(), 1e-4, 32);
    for (a, b) in y.iter_mut().zip(&noise) {
        *a += b;
    }
    let rot = Complex64::from_polar(1.0, 1.234);
    let y_rot: Vec<Complex64> = y.iter().map(|z| z * rot).collect();
    let cfg = EstimatorConfig {
        lambda1: 0.02,
        lambda_tv: 0.005,
        top_k: 6,
        dilation_y: 1,
        dilation_z: 0,
        lasso: TIGHT,
        tv: TIGHT,
        ..EstimatorConfig::default()
    };
    let base = estimate_methods(&book, &op, &y, &cfg, &Method::ALL).unwrap();
    let turned = estimate_methods(&book, &op, &y_rot, &cfg, &Method::ALL).unwrap();
    for (a, b) in base.iter().zip(&turned) {
        let expect: Vec<Complex64> = a.h_hat.entries().iter().map(|z| z * rot).collect();
        let tol = if a.method == Method::L2 { 1e-10 } else { 1e-6 };
        let e = rel_err(b.h_hat.entries(), &expect);
        assert!(e < tol, "{}: {e}", a.method);
        for (x, z) in a.s_hat.as_slice().iter().zip(b.s_hat.as_slice()) {
            assert!((x.norm() - z.norm()).abs() < 1e-6 * (1.0 + x.norm()));
        }
    }
}

#[test]
fn zero_lasso_output_is_flagged_not_fatal() {
    let (geom, book) = small_geometry(8, 4);
    let op = nfbeam::estimator::make_sensing(&geom, 12, 1).unwrap();
    let y = random_complex_vec(12, 1.0, 2);
    let cfg = EstimatorConfig { lambda1: 1e6, ..EstimatorConfig::default() };
    let est = estimate_channel(&book, &op, &y, &cfg, Method::LassoTv).unwrap();
    assert!(est.diagnostics.zero_estimate);
    assert!(est.v_hat.is_none());
}
