//! Gaussian-masked pilot sensing: `y = Φ vec(S) + w`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beamspace::BeamspaceMatrix;
use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::rng;

/// `M x N` sensing matrix whose rows are the pilot masks `p_m^H`,
/// `p_m ~ CN(0, I/N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingOperator {
    phi: DMatrix<Complex64>,
    seed: u64,
}

impl SensingOperator {
    pub fn from_matrix(phi: DMatrix<Complex64>, seed: u64) -> Self {
        Self { phi, seed }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.phi
    }

    pub fn m_pilots(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n_coeffs(&self) -> usize {
        self.phi.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `Φ s`.
    pub fn apply(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        if s.len() != self.n_coeffs() {
            return Err(Error::DimensionMismatch { expected: self.n_coeffs(), got: s.len() });
        }
        let v = &self.phi * DVector::from_column_slice(s);
        Ok(v.as_slice().to_vec())
    }

    /// `Φ^H r`.
    pub fn apply_adjoint(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        if r.len() != self.m_pilots() {
            return Err(Error::DimensionMismatch { expected: self.m_pilots(), got: r.len() });
        }
        let v = self.phi.ad_mul(&DVector::from_column_slice(r));
        Ok(v.as_slice().to_vec())
    }
}

/// Draw an `m_pilots x N` operator with i.i.d. `CN(0, 1/N)` entries.
///
/// Entries are drawn row by row, so operators with the same seed and
/// different pilot counts share their leading rows.
pub fn make_sensing(geom: &ArrayGeometry, m_pilots: usize, seed: u64) -> Result<SensingOperator> {
    let n = geom.n_total();
    if m_pilots < 1 || m_pilots > n {
        return Err(Error::domain(format!("pilot count {m_pilots} outside [1, {n}]")));
    }
    let mut r = rng::stream(seed);
    let var = 1.0 / n as f64;
    let mut phi = DMatrix::zeros(m_pilots, n);
    for row in 0..m_pilots {
        for col in 0..n {
            phi[(row, col)] = rng::complex_gaussian(&mut r, var);
        }
    }
    Ok(SensingOperator { phi, seed })
}

/// Received pilot observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementVector {
    pub y: Vec<Complex64>,
    pub noise_var: f64,
    pub snr_db: f64,
}

impl MeasurementVector {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Noise variance for per-measurement SNR `(‖s‖^2 / N) / σ^2`.
pub fn noise_variance(s: &BeamspaceMatrix, snr_db: f64) -> Result<f64> {
    if snr_db.is_nan() {
        return Err(Error::domain("SNR is NaN"));
    }
    let energy = s.norm().powi(2);
    if !(energy > 0.0) {
        return Err(Error::DegenerateSnr);
    }
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(energy / s.len() as f64 / 10f64.powf(snr_db / 10.0))
}

/// `y = Φ vec(S) + w`, `w ~ CN(0, σ^2 I)`.
///
/// The noise is drawn as unit-variance samples from `seed` and scaled by
/// `σ`, so measurements at different SNRs with one seed share the same
/// noise direction.
pub fn measure(op: &SensingOperator, s: &BeamspaceMatrix, snr_db: f64, seed: u64) -> Result<MeasurementVector> {
    let noise_var = noise_variance(s, snr_db)?;
    let mut y = op.apply(s.as_slice())?;
    if noise_var > 0.0 {
        let sigma = noise_var.sqrt();
        let mut r = rng::stream(seed);
        for v in y.iter_mut() {
            *v += rng::complex_gaussian(&mut r, 1.0) * sigma;
        }
    }
    Ok(MeasurementVector { y, noise_var, snr_db })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(n_y: usize, n_z: usize) -> ArrayGeometry {
        ArrayGeometry::new(n_y, n_z, 28e9).unwrap()
    }

    fn random_s(n_y: usize, n_z: usize, seed: u64) -> BeamspaceMatrix {
        let mut r = rng::stream(seed);
        let data = (0..n_y * n_z).map(|_| rng::complex_gaussian(&mut r, 1.0)).collect();
        BeamspaceMatrix::from_vec(n_y, n_z, data).unwrap()
    }

    #[test]
    fn deterministic_by_seed() {
        let g = geom(8, 4);
        assert_eq!(make_sensing(&g, 10, 3).unwrap(), make_sensing(&g, 10, 3).unwrap());
        assert_ne!(make_sensing(&g, 10, 3).unwrap(), make_sensing(&g, 10, 4).unwrap());
    }

    #[test]
    fn leading_rows_are_shared() {
        let g = geom(8, 4);
        let a = make_sensing(&g, 8, 3).unwrap();
        let b = make_sensing(&g, 16, 3).unwrap();
        assert_eq!(a.matrix(), &b.matrix().rows(0, 8).into_owned());
    }

    #[test]
    fn pilot_count_range() {
        let g = geom(4, 2);
        assert!(make_sensing(&g, 0, 1).is_err());
        assert!(make_sensing(&g, 9, 1).is_err());
        assert!(make_sensing(&g, 8, 1).is_ok());
    }

    #[test]
    fn rows_have_unit_expected_norm() {
        let g = geom(32, 16);
        let op = make_sensing(&g, 512, 8).unwrap();
        let mean: f64 = op.matrix().row_iter().map(|r| r.norm_squared()).sum::<f64>() / 512.0;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn noiseless_measurement_is_exact() {
        let g = geom(8, 4);
        let op = make_sensing(&g, 12, 1).unwrap();
        let s = random_s(8, 4, 2);
        let y = measure(&op, &s, f64::INFINITY, 5).unwrap();
        assert_eq!(y.noise_var, 0.0);
        assert_eq!(y.y, op.apply(s.as_slice()).unwrap());
    }

    #[test]
    fn zero_signal_is_rejected() {
        let g = geom(8, 4);
        let op = make_sensing(&g, 12, 1).unwrap();
        assert!(matches!(measure(&op, &BeamspaceMatrix::zeros(8, 4), 10.0, 0), Err(Error::DegenerateSnr)));
    }

    #[test]
    fn noise_power_matches_snr() {
        let g = geom(64, 32);
        let op = make_sensing(&g, 2048, 1).unwrap();
        let s = random_s(64, 32, 2);
        let clean = op.apply(s.as_slice()).unwrap();
        let y = measure(&op, &s, 0.0, 77).unwrap();
        let want = s.norm().powi(2) / 2048.0;
        assert!((y.noise_var - want).abs() < 1e-12 * want);
        let p: f64 = y.y.iter().zip(&clean).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / 2048.0;
        assert!((p / y.noise_var - 1.0).abs() < 0.05, "{}", p / y.noise_var);
    }

    #[test]
    fn adjoint_identity() {
        let g = geom(8, 4);
        let op = make_sensing(&g, 12, 1).unwrap();
        let s = random_s(8, 4, 3);
        let mut r = rng::stream(4);
        let v: Vec<Complex64> = (0..12).map(|_| rng::complex_gaussian(&mut r, 1.0)).collect();
        let lhs: Complex64 = crate::channel::inner(&v, &op.apply(s.as_slice()).unwrap());
        let rhs: Complex64 = crate::channel::inner(&op.apply_adjoint(&v).unwrap(), s.as_slice());
        assert!((lhs - rhs).norm() < 1e-12);
        assert!(op.apply(&[Complex64::new(0.0, 0.0); 3]).is_err());
    }
}
