mod common;

use nfbeam::estimator::{tv_1d, tv_prox_1d};
use nfbeam::rng;

#[test]
fn tv_prox_matches_dual_enumeration() {
    let mut r = rng::stream(404);
    for case in 0..300 {
        let n = 1 + case % 8;
        let x: Vec<f64> = (0..n).map(|_| rng::uniform(&mut r, -3.0, 3.0)).collect();
        let tau = rng::uniform(&mut r, 0.0, 2.0);
        let got = tv_prox_1d(&x, tau);
        let want = common::tv_prox_oracle(&x, tau);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "x={x:?} tau={tau} got={got:?} want={want:?}");
        }
    }
}

#[test]
fn tv_prox_handles_plateaus_and_ties() {
    let cases: [(&[f64], f64); 5] = [
        (&[1.0, 1.0, 5.0, 5.0, 1.0, 1.0], 0.5),
        (&[0.0, 0.0, 0.0, 1.0], 0.25),
        (&[3.0, -3.0, 3.0, -3.0, 3.0], 1.0),
        (&[2.0, 2.0], 1.0),
        (&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], 0.6),
    ];
    for (x, tau) in cases {
        let got = tv_prox_1d(x, tau);
        let want = common::tv_prox_oracle(x, tau);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "x={x:?} got={got:?} want={want:?}");
        }
        assert!(tv_1d(&got) <= tv_1d(x) + 1e-12);
    }
}

#[test]
fn tv_prox_long_random_inputs_are_stable() {
    let mut r = rng::stream(9);
    for _ in 0..200 {
        let n = 200;
        let x: Vec<f64> = (0..n).map(|_| rng::uniform(&mut r, 0.0, 1.0) * 1e3).collect();
        let tau = rng::uniform(&mut r, 0.0, 5e3);
        let z = tv_prox_1d(&x, tau);
        assert_eq!(z.len(), n);
        let (sx, sz): (f64, f64) = (x.iter().sum(), z.iter().sum());
        assert!((sx - sz).abs() < 1e-8 * sx.abs());
    }
}
