use nfbeam::beamspace::{BeamspaceMatrix, DftCodebook};
use nfbeam::channel::{steering_vector, ChannelVector, SphericalPoint};
use nfbeam::estimator::{soft_threshold_complex, tv_1d, tv_prox_1d};
use nfbeam::geometry::ArrayGeometry;
use nfbeam::harness::{compute_nmse, compute_rho_db, compute_rho_linear};
use nfbeam::Complex64;
use proptest::prelude::*;

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| Complex64::new(a, b)), n)
}

fn nonzero(v: &[Complex64]) -> bool {
    v.iter().any(|z| z.norm() > 1e-6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beamspace_transform_is_unitary(h in complex_vec(48)) {
        let g = ArrayGeometry::new(12, 4, 28e9).unwrap();
        let book = DftCodebook::new(&g);
        let hv = ChannelVector::new(h.clone());
        let s = book.to_beamspace(&hv).unwrap();
        prop_assert!((s.norm() - hv.norm()).abs() <= 1e-12 * (1.0 + hv.norm()));
        let back = book.from_beamspace(&s).unwrap();
        for (a, b) in back.entries().iter().zip(&h) {
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + hv.norm()));
        }
    }

    #[test]
    fn steering_vectors_have_unit_norm(u in -0.7f64..0.7, v in -0.7f64..0.7, r in 0.5f64..50.0) {
        prop_assume!(u * u + v * v < 0.95);
        let g = ArrayGeometry::new(16, 8, 28e9).unwrap();
        let b = steering_vector(&g, &SphericalPoint::from_uv(u, v, r).unwrap()).unwrap();
        prop_assert!((b.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gain_metric_is_bounded_and_scale_free(a in complex_vec(8), b in complex_vec(8), re in 0.1f64..5.0, im in -5.0f64..5.0) {
        prop_assume!(nonzero(&a) && nonzero(&b));
        let (ha, hb) = (ChannelVector::new(a.clone()), ChannelVector::new(b));
        let rho = compute_rho_db(&ha, &hb).unwrap();
        prop_assert!(rho <= 1e-9);
        let c = Complex64::new(re, im);
        let scaled = ChannelVector::new(a.iter().map(|z| z * c).collect());
        let r1 = compute_rho_linear(&ha, &hb).unwrap();
        let r2 = compute_rho_linear(&scaled, &hb).unwrap();
        prop_assert!((r1 - r2).abs() < 1e-12);
        prop_assert!(compute_rho_db(&scaled, &ha).unwrap().abs() < 1e-9);
        prop_assert!(compute_nmse(&ha, &hb).unwrap() >= 0.0);
    }

    #[test]
    fn soft_threshold_shrinks_magnitude_and_keeps_phase(re in -10.0f64..10.0, im in -10.0f64..10.0, tau in 0.0f64..8.0) {
        let z = Complex64::new(re, im);
        let out = soft_threshold_complex(z, tau);
        let expect = (z.norm() - tau).max(0.0);
        prop_assert!((out.norm() - expect).abs() < 1e-12);
        if out.norm() > 0.0 {
            prop_assert!((out / out.norm() - z / z.norm()).norm() < 1e-12);
        }
    }

    #[test]
    fn tv_prox_conserves_mean_and_never_adds_variation(x in prop::collection::vec(-5.0f64..5.0, 1..40), tau in 0.0f64..3.0) {
        let z = tv_prox_1d(&x, tau);
        let n = x.len() as f64;
        let (mx, mz) = (x.iter().sum::<f64>() / n, z.iter().sum::<f64>() / n);
        prop_assert!((mx - mz).abs() < 1e-10);
        prop_assert!(tv_1d(&z) <= tv_1d(&x) + 1e-10);
    }

    #[test]
    fn beamspace_matrix_indexing_is_column_stacked(n_y in 1usize..8, n_z in 1usize..6) {
        let data: Vec<Complex64> = (0..n_y * n_z).map(|k| Complex64::new(k as f64, 0.0)).collect();
        let s = BeamspaceMatrix::from_vec(n_y, n_z, data).unwrap();
        for j in 0..n_z {
            for i in 0..n_y {
                prop_assert_eq!(s.get(i, j).re as usize, i + j * n_y);
            }
        }
    }
}
