//! Support masks: top-k selection and Chebyshev dilation.

use serde::{Deserialize, Serialize};

use crate::beamspace::BeamspaceMatrix;
use crate::error::{Error, Result};
use crate::geometry::flat_index;

/// Boolean support over an `n_y x n_z` beamspace grid, column-stacked.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportMask {
    n_y: usize,
    n_z: usize,
    active: Vec<bool>,
}

impl SupportMask {
    pub fn empty(n_y: usize, n_z: usize) -> Self {
        Self { n_y, n_z, active: vec![false; n_y * n_z] }
    }

    pub fn from_active(n_y: usize, n_z: usize, active: Vec<bool>) -> Result<Self> {
        if active.len() != n_y * n_z {
            return Err(Error::DimensionMismatch { expected: n_y * n_z, got: active.len() });
        }
        Ok(Self { n_y, n_z, active })
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn is_active(&self, n: usize, m: usize) -> bool {
        self.active[flat_index(n, m, self.n_y)]
    }

    pub fn count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Flat indices of active cells in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        self.active.iter().enumerate().filter_map(|(k, &a)| a.then_some(k)).collect()
    }

    pub fn is_subset_of(&self, other: &SupportMask) -> bool {
        self.active.iter().zip(&other.active).all(|(&a, &b)| !a || b)
    }
}

/// Mask of the `k` largest magnitudes; ties break toward the lower flat index.
pub fn topk_mask(s: &BeamspaceMatrix, k: usize) -> Result<SupportMask> {
    if k == 0 || k > s.len() {
        return Err(Error::domain(format!("top-k size {k} outside [1, {}]", s.len())));
    }
    let data = s.as_slice();
    let mags: Vec<f64> = data.iter().map(|z| z.norm()).collect();
    let mut order: Vec<usize> = (0..mags.len()).collect();
    order.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));
    let mut mask = SupportMask::empty(s.n_y(), s.n_z());
    for &idx in order.iter().take(k) {
        mask.active[idx] = true;
    }
    Ok(mask)
}

/// Grow each active cell to the box `|Δn| <= r_y`, `|Δm| <= r_z`, clipped
/// at the grid edges (no wraparound).
pub fn dilate_mask(mask: &SupportMask, r_y: usize, r_z: usize) -> SupportMask {
    let (ny, nz) = (mask.n_y, mask.n_z);
    let mut along_y = vec![false; ny * nz];
    for m in 0..nz {
        for n in 0..ny {
            if mask.active[flat_index(n, m, ny)] {
                let lo = n.saturating_sub(r_y);
                let hi = (n + r_y).min(ny - 1);
                for t in lo..=hi {
                    along_y[flat_index(t, m, ny)] = true;
                }
            }
        }
    }
    let mut out = vec![false; ny * nz];
    for m in 0..nz {
        for n in 0..ny {
            if along_y[flat_index(n, m, ny)] {
                let lo = m.saturating_sub(r_z);
                let hi = (m + r_z).min(nz - 1);
                for t in lo..=hi {
                    out[flat_index(n, t, ny)] = true;
                }
            }
        }
    }
    SupportMask { n_y: ny, n_z: nz, active: out }
}
