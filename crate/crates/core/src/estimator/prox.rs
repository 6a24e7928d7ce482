//! Proximal operators: complex soft-thresholding, exact 1D total variation
//! and the masked anisotropic 2D total variation on magnitude maps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::flat_index;

/// `z * max(1 - tau/|z|, 0)`.
pub fn soft_threshold_complex(z: Complex64, tau: f64) -> Complex64 {
    let mag = z.norm();
    if mag <= tau || mag == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z * (1.0 - tau / mag)
    }
}

/// Exact minimizer of `1/2 ‖z - x‖^2 + tau * Σ |z_{t+1} - z_t|`.
///
/// Taut-string method: the cumulative sum of the solution is the shortest
/// path through the tube `cumsum(x) ± tau` with both ends pinned, and `z`
/// is its slope sequence.
pub fn tv_prox_1d(x: &[f64], tau: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    tv_prox_1d_into(x, tau, &mut out, &mut Vec::new());
    out
}

pub(crate) fn tv_prox_1d_into(x: &[f64], tau: f64, out: &mut [f64], cum: &mut Vec<f64>) {
    let n = x.len();
    debug_assert_eq!(out.len(), n);
    if n <= 1 || !(tau > 0.0) {
        out.copy_from_slice(x);
        return;
    }
    cum.clear();
    cum.push(0.0);
    let mut acc = 0.0;
    for &v in x {
        acc += v;
        cum.push(acc);
    }
    let bounds = |t: usize| -> (f64, f64) {
        if t == n {
            (cum[n], cum[n])
        } else {
            (cum[t] - tau, cum[t] + tau)
        }
    };
    let (mut a, mut ra) = (0usize, 0.0f64);
    while a < n {
        let (mut lo_slope, mut lo_idx) = (f64::NEG_INFINITY, a);
        let (mut hi_slope, mut hi_idx) = (f64::INFINITY, a);
        let mut next = None;
        for t in a + 1..=n {
            let (lower, upper) = bounds(t);
            let len = (t - a) as f64;
            let sl = (lower - ra) / len;
            let su = (upper - ra) / len;
            if sl > hi_slope {
                next = Some((hi_idx, hi_slope, bounds(hi_idx).1));
                break;
            }
            if su < lo_slope {
                next = Some((lo_idx, lo_slope, bounds(lo_idx).0));
                break;
            }
            if sl >= lo_slope {
                lo_slope = sl;
                lo_idx = t;
            }
            if su <= hi_slope {
                hi_slope = su;
                hi_idx = t;
            }
        }
        let (b, slope, rb) = next.unwrap_or((n, lo_slope, cum[n]));
        for v in &mut out[a..b] {
            *v = slope;
        }
        a = b;
        ra = rb;
    }
}

/// Total variation `Σ |x_{t+1} - x_t|`.
pub fn tv_1d(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Which neighbor differences enter the masked TV.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvNeighborRule {
    /// Only differences whose endpoints are both in the mask.
    #[default]
    BothEndpoints,
    /// Also differences between a mask cell and an in-array off-mask
    /// neighbor, which is pinned to zero.
    AnyEndpoint,
}

/// A maximal run of consecutive mask cells along one axis.
#[derive(Clone, Debug, PartialEq)]
struct Chain {
    cells: Vec<usize>,
    // number of pinned-zero neighbors at the start / end (0 or 1)
    pinned_start: bool,
    pinned_end: bool,
}

/// Chains of a mask along both axes; drives the 2D masked TV.
#[derive(Clone, Debug)]
pub struct MaskedTv {
    n: usize,
    along_y: Vec<Chain>,
    along_z: Vec<Chain>,
    rule: TvNeighborRule,
}

impl MaskedTv {
    /// `active` is column-stacked over an `n_y x n_z` grid.
    pub fn new(active: &[bool], n_y: usize, n_z: usize, rule: TvNeighborRule) -> Self {
        assert_eq!(active.len(), n_y * n_z);
        let mut along_y = Vec::new();
        for j in 0..n_z {
            let line: Vec<usize> = (0..n_y).map(|i| flat_index(i, j, n_y)).collect();
            along_y.extend(chains_of_line(active, &line));
        }
        let mut along_z = Vec::new();
        for i in 0..n_y {
            let line: Vec<usize> = (0..n_z).map(|j| flat_index(i, j, n_y)).collect();
            along_z.extend(chains_of_line(active, &line));
        }
        Self { n: n_y * n_z, along_y, along_z, rule }
    }

    pub fn rule(&self) -> TvNeighborRule {
        self.rule
    }

    /// Masked TV of a nonnegative map (values off the mask are ignored).
    pub fn value(&self, mags: &[f64]) -> f64 {
        let mut acc = 0.0;
        for c in self.along_y.iter().chain(&self.along_z) {
            for w in c.cells.windows(2) {
                acc += (mags[w[1]] - mags[w[0]]).abs();
            }
            if self.rule == TvNeighborRule::AnyEndpoint {
                if c.pinned_start {
                    acc += mags[c.cells[0]].abs();
                }
                if c.pinned_end {
                    acc += mags[*c.cells.last().unwrap()].abs();
                }
            }
        }
        acc
    }

    // prox of tau * (chain TV) + nonnegativity along one family of chains
    fn prox_family(&self, chains: &[Chain], input: &[f64], tau: f64, out: &mut [f64], scratch: &mut Scratch) {
        let Scratch { buf, res, cum } = scratch;
        for c in chains {
            buf.clear();
            buf.extend(c.cells.iter().map(|&k| input[k]));
            if self.rule == TvNeighborRule::AnyEndpoint {
                if c.pinned_start {
                    buf[0] -= tau;
                }
                if c.pinned_end {
                    let last = buf.len() - 1;
                    buf[last] -= tau;
                }
            }
            res.resize(buf.len(), 0.0);
            tv_prox_1d_into(buf, tau, res, cum);
            for (&k, &v) in c.cells.iter().zip(res.iter()) {
                out[k] = v.max(0.0);
            }
        }
    }

    /// Approximate prox of `tau * TV_2D(·; mask)` plus nonnegativity,
    /// by Dykstra alternation of exact prox passes along y and along z.
    pub fn prox(&self, mags: &[f64], tau: f64, sweeps: usize) -> Vec<f64> {
        assert_eq!(mags.len(), self.n);
        let mut x = mags.to_vec();
        if !(tau > 0.0) {
            for v in x.iter_mut() {
                *v = v.max(0.0);
            }
            return x;
        }
        let mut p = vec![0.0; self.n];
        let mut q = vec![0.0; self.n];
        let mut y = vec![0.0; self.n];
        let mut tmp = vec![0.0; self.n];
        let mut scratch = Scratch::default();
        for _ in 0..sweeps.max(1) {
            for k in 0..self.n {
                tmp[k] = x[k] + p[k];
            }
            y.copy_from_slice(&tmp);
            self.prox_family(&self.along_y, &tmp, tau, &mut y, &mut scratch);
            for k in 0..self.n {
                p[k] = tmp[k] - y[k];
                tmp[k] = y[k] + q[k];
            }
            x.copy_from_slice(&tmp);
            self.prox_family(&self.along_z, &tmp, tau, &mut x, &mut scratch);
            for k in 0..self.n {
                q[k] = tmp[k] - x[k];
            }
        }
        x
    }
}

#[derive(Default)]
struct Scratch {
    buf: Vec<f64>,
    res: Vec<f64>,
    cum: Vec<f64>,
}

fn chains_of_line(active: &[bool], line: &[usize]) -> Vec<Chain> {
    let mut out = Vec::new();
    let mut t = 0;
    while t < line.len() {
        if !active[line[t]] {
            t += 1;
            continue;
        }
        let start = t;
        while t < line.len() && active[line[t]] {
            t += 1;
        }
        out.push(Chain { cells: line[start..t].to_vec(), pinned_start: start > 0, pinned_end: t < line.len() });
    }
    out
}
