//! Uniform planar array geometry.
//!
//! The array lies in the y-z plane, centered at the origin, with
//! half-wavelength spacing. Element `(i, j)` sits at `(0, δ_i d, δ_j d)` where
//! `δ_i = (2i - N_y + 1) / 2` is the centered index offset.
//!
//! Flattened vectors over the array (channels, beamspace coefficients) use
//! column-stacking of the `N_y x N_z` grid: the y-index `i` runs fastest, so
//! element `(i, j)` lives at `i + j * N_y`. See [`flat_index`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Coefficient of the Fresnel boundary `c * sqrt(D^3 / λ)`.
pub const DEFAULT_FRESNEL_COEFF: f64 = 0.62;

/// Column-stacked position of `(i, j)` in an `n_y x n_z` grid.
#[inline]
pub fn flat_index(i: usize, j: usize, n_y: usize) -> usize {
    i + j * n_y
}

/// Inverse of [`flat_index`].
#[inline]
pub fn grid_index(k: usize, n_y: usize) -> (usize, usize) {
    (k % n_y, k / n_y)
}

/// Centered offset `(2 i - n + 1) / 2`.
#[inline]
pub fn centered_offset(index: usize, n: usize) -> f64 {
    (2.0 * index as f64 - n as f64 + 1.0) / 2.0
}

/// Centered offsets of one array axis.
pub fn axis_offsets(n: usize) -> Vec<f64> {
    (0..n).map(|i| centered_offset(i, n)).collect()
}

/// Centered offsets `(δ_i, δ_j)` of a single element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndexOffset {
    pub delta_i: f64,
    pub delta_j: f64,
}

/// How the near-field region boundaries are computed.
///
/// By default `r_R = 2 D^2 / λ` and `r_F = fresnel_coeff * sqrt(D^3 / λ)`
/// with `D` the physical array diagonal. Either boundary can be pinned to an
/// exact value in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceConvention {
    pub fresnel_coeff: f64,
    #[serde(default)]
    pub rayleigh_m: Option<f64>,
    #[serde(default)]
    pub fresnel_m: Option<f64>,
}

impl Default for DistanceConvention {
    fn default() -> Self {
        Self { fresnel_coeff: DEFAULT_FRESNEL_COEFF, rayleigh_m: None, fresnel_m: None }
    }
}

/// A half-wavelength-spaced `N_y x N_z` uniform planar array.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrayGeometry {
    n_y: usize,
    n_z: usize,
    carrier_freq_hz: f64,
    wavelength_m: f64,
    spacing_m: f64,
    convention: DistanceConvention,
}

impl ArrayGeometry {
    pub fn new(n_y: usize, n_z: usize, carrier_freq_hz: f64) -> Result<Self> {
        Self::with_convention(n_y, n_z, carrier_freq_hz, DistanceConvention::default())
    }

    pub fn with_convention(
        n_y: usize,
        n_z: usize,
        carrier_freq_hz: f64,
        convention: DistanceConvention,
    ) -> Result<Self> {
        if n_y == 0 || n_z == 0 {
            return Err(Error::domain(format!("array dimensions must be positive, got {n_y}x{n_z}")));
        }
        if !(carrier_freq_hz.is_finite() && carrier_freq_hz > 0.0) {
            return Err(Error::domain(format!("carrier frequency must be positive, got {carrier_freq_hz}")));
        }
        if !(convention.fresnel_coeff.is_finite() && convention.fresnel_coeff > 0.0) {
            return Err(Error::domain("fresnel coefficient must be positive"));
        }
        for v in [convention.rayleigh_m, convention.fresnel_m].into_iter().flatten() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!("distance override must be >= 0, got {v}")));
            }
        }
        let wavelength_m = SPEED_OF_LIGHT / carrier_freq_hz;
        Ok(Self { n_y, n_z, carrier_freq_hz, wavelength_m, spacing_m: wavelength_m / 2.0, convention })
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn n_total(&self) -> usize {
        self.n_y * self.n_z
    }

    pub fn carrier_freq_hz(&self) -> f64 {
        self.carrier_freq_hz
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    /// Wavenumber `2π / λ`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength_m
    }

    pub fn convention(&self) -> DistanceConvention {
        self.convention
    }

    pub fn offsets(&self, i: usize, j: usize) -> Result<IndexOffset> {
        self.check_index(i, j)?;
        Ok(IndexOffset { delta_i: centered_offset(i, self.n_y), delta_j: centered_offset(j, self.n_z) })
    }

    pub fn y_offsets(&self) -> Vec<f64> {
        axis_offsets(self.n_y)
    }

    pub fn z_offsets(&self) -> Vec<f64> {
        axis_offsets(self.n_z)
    }

    /// Cartesian position of element `(i, j)` in meters.
    pub fn element_position(&self, i: usize, j: usize) -> Result<[f64; 3]> {
        let off = self.offsets(i, j)?;
        Ok([0.0, off.delta_i * self.spacing_m, off.delta_j * self.spacing_m])
    }

    /// Physical array diagonal `d * sqrt((N_y-1)^2 + (N_z-1)^2)`.
    pub fn aperture_m(&self) -> f64 {
        let a = (self.n_y - 1) as f64;
        let b = (self.n_z - 1) as f64;
        self.spacing_m * a.hypot(b)
    }

    pub fn rayleigh_distance(&self) -> f64 {
        if let Some(r) = self.convention.rayleigh_m {
            return r;
        }
        let d = self.aperture_m();
        2.0 * d * d / self.wavelength_m
    }

    pub fn fresnel_distance(&self) -> f64 {
        if let Some(r) = self.convention.fresnel_m {
            return r;
        }
        let d = self.aperture_m();
        self.convention.fresnel_coeff * (d * d * d / self.wavelength_m).sqrt()
    }

    pub fn flat_index(&self, i: usize, j: usize) -> usize {
        flat_index(i, j, self.n_y)
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.n_y || j >= self.n_z {
            return Err(Error::IndexOutOfRange { i, j, n_y: self.n_y, n_z: self.n_z });
        }
        Ok(())
    }
}
