//! 2D DFT beamspace: codebook, transforms, beam patterns, lobe widths and
//! the expected-sparsity predictor.
//!
//! Codewords follow the far-field limit of the steering vector, so a path at
//! spatial variables `(u, v)` peaks at the grid point nearest `(u, v)`:
//! `[a_y(u)]_i = exp(+j k d u δ_i) / sqrt(N_y)`. The codeword for grid point
//! `(n, m)` has entry `[a_y(u_n)]_i [a_z(v_m)]_j` at flat index `i + j N_y`,
//! the same column-stacked order used by [`ChannelVector`].

use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{steering_vector, ChannelVector, Scene, SceneDistribution, SphericalPoint};
use crate::error::{Error, Result};
use crate::geometry::{axis_offsets, flat_index, ArrayGeometry};
use crate::rng;

/// Array axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Y,
    Z,
}

/// Unit-norm 1D far-field codeword `exp(+j k d x δ_i) / sqrt(n)`.
pub fn axis_codeword(n: usize, kd: f64, x: f64) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    axis_offsets(n).into_iter().map(|o| Complex64::from_polar(scale, kd * x * o)).collect()
}

/// Uniform spatial grid `(2n - N + 1) / N`.
pub fn dft_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| (2.0 * i as f64 - n as f64 + 1.0) / n as f64).collect()
}

/// Column-major `n x n` matrix whose columns are the grid codewords.
fn axis_dictionary(n: usize, kd: f64, grid: &[f64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n * n);
    for &x in grid {
        out.extend(axis_codeword(n, kd, x));
    }
    out
}

/// The unitary 2D DFT codebook of a UPA.
#[derive(Clone, Debug)]
pub struct DftCodebook {
    geom: ArrayGeometry,
    grid_u: Vec<f64>,
    grid_v: Vec<f64>,
    // ay[i + n * n_y] = [a_y(u_n)]_i
    ay: Vec<Complex64>,
    az: Vec<Complex64>,
}

impl DftCodebook {
    pub fn new(geom: &ArrayGeometry) -> Self {
        let kd = geom.wavenumber() * geom.spacing_m();
        let grid_u = dft_grid(geom.n_y());
        let grid_v = dft_grid(geom.n_z());
        let ay = axis_dictionary(geom.n_y(), kd, &grid_u);
        let az = axis_dictionary(geom.n_z(), kd, &grid_v);
        Self { geom: geom.clone(), grid_u, grid_v, ay, az }
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geom
    }

    pub fn n_y(&self) -> usize {
        self.geom.n_y()
    }

    pub fn n_z(&self) -> usize {
        self.geom.n_z()
    }

    pub fn grid_u(&self) -> &[f64] {
        &self.grid_u
    }

    pub fn grid_v(&self) -> &[f64] {
        &self.grid_v
    }

    /// `Δ_y = 2 / N_y`.
    pub fn spacing_u(&self) -> f64 {
        2.0 / self.n_y() as f64
    }

    /// `Δ_z = 2 / N_z`.
    pub fn spacing_v(&self) -> f64 {
        2.0 / self.n_z() as f64
    }

    /// 2D codeword pointing at `(u_n, v_m)`.
    pub fn dft_codeword(&self, n: usize, m: usize) -> Result<ChannelVector> {
        let (ny, nz) = (self.n_y(), self.n_z());
        if n >= ny || m >= nz {
            return Err(Error::IndexOutOfRange { i: n, j: m, n_y: ny, n_z: nz });
        }
        let mut out = Vec::with_capacity(ny * nz);
        for j in 0..nz {
            let zj = self.az[j + m * nz];
            for i in 0..ny {
                out.push(self.ay[i + n * ny] * zj);
            }
        }
        Ok(ChannelVector::new(out))
    }

    /// The explicit `N x N` codebook matrix `F`; column `flat(n, m)` is the
    /// codeword for `(n, m)`. Quadratic memory; meant for checks.
    pub fn dense_matrix(&self) -> DMatrix<Complex64> {
        let (ny, nz) = (self.n_y(), self.n_z());
        let n = ny * nz;
        DMatrix::from_fn(n, n, |row, col| {
            let (i, j) = (row % ny, row / ny);
            let (p, q) = (col % ny, col / ny);
            self.ay[i + p * ny] * self.az[j + q * nz]
        })
    }

    /// `S = reshape(F^H h)`, computed as two 1D passes.
    pub fn to_beamspace(&self, h: &ChannelVector) -> Result<BeamspaceMatrix> {
        let (ny, nz) = (self.n_y(), self.n_z());
        if h.len() != ny * nz {
            return Err(Error::DimensionMismatch { expected: ny * nz, got: h.len() });
        }
        let x = h.entries();
        // t[n + j ny] = sum_i conj(ay[i, n]) x[i, j]
        let mut t = vec![Complex64::new(0.0, 0.0); ny * nz];
        for j in 0..nz {
            let col = &x[j * ny..(j + 1) * ny];
            for n in 0..ny {
                let a = &self.ay[n * ny..(n + 1) * ny];
                t[n + j * ny] = a.iter().zip(col).map(|(a, c)| a.conj() * c).sum();
            }
        }
        let mut s = vec![Complex64::new(0.0, 0.0); ny * nz];
        for m in 0..nz {
            let a = &self.az[m * nz..(m + 1) * nz];
            for n in 0..ny {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, aj) in a.iter().enumerate() {
                    acc += t[n + j * ny] * aj.conj();
                }
                s[n + m * ny] = acc;
            }
        }
        Ok(BeamspaceMatrix { n_y: ny, n_z: nz, data: s })
    }

    /// `h = F vec(S)`.
    pub fn from_beamspace(&self, s: &BeamspaceMatrix) -> Result<ChannelVector> {
        let (ny, nz) = (self.n_y(), self.n_z());
        if s.n_y != ny || s.n_z != nz {
            return Err(Error::DimensionMismatch { expected: ny * nz, got: s.data.len() });
        }
        // t[i + m ny] = sum_n ay[i, n] s[n, m]
        let mut t = vec![Complex64::new(0.0, 0.0); ny * nz];
        for m in 0..nz {
            for n in 0..ny {
                let c = s.data[n + m * ny];
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let a = &self.ay[n * ny..(n + 1) * ny];
                for (i, ai) in a.iter().enumerate() {
                    t[i + m * ny] += ai * c;
                }
            }
        }
        let mut h = vec![Complex64::new(0.0, 0.0); ny * nz];
        for j in 0..nz {
            for m in 0..nz {
                let a = self.az[j + m * nz];
                for i in 0..ny {
                    h[i + j * ny] += t[i + m * ny] * a;
                }
            }
        }
        Ok(ChannelVector::new(h))
    }

    pub(crate) fn ay_column(&self, n: usize) -> &[Complex64] {
        let ny = self.n_y();
        &self.ay[n * ny..(n + 1) * ny]
    }

    pub(crate) fn az_column(&self, m: usize) -> &[Complex64] {
        let nz = self.n_z();
        &self.az[m * nz..(m + 1) * nz]
    }
}

/// Complex `N_y x N_z` beamspace coefficients, column-stacked.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamspaceMatrix {
    n_y: usize,
    n_z: usize,
    data: Vec<Complex64>,
}

impl BeamspaceMatrix {
    pub fn zeros(n_y: usize, n_z: usize) -> Self {
        Self { n_y, n_z, data: vec![Complex64::new(0.0, 0.0); n_y * n_z] }
    }

    pub fn from_vec(n_y: usize, n_z: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n_y * n_z {
            return Err(Error::DimensionMismatch { expected: n_y * n_z, got: data.len() });
        }
        Ok(Self { n_y, n_z, data })
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.data[flat_index(n, m, self.n_y)]
    }

    pub fn set(&mut self, n: usize, m: usize, value: Complex64) {
        self.data[flat_index(n, m, self.n_y)] = value;
    }

    /// `vec(S)`.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        crate::channel::norm(&self.data)
    }

    pub fn magnitudes(&self) -> RealGrid {
        RealGrid { n_y: self.n_y, n_z: self.n_z, data: self.data.iter().map(|c| c.norm()).collect() }
    }
}

/// Real `N_y x N_z` grid (pattern or magnitude map), column-stacked.
#[derive(Clone, Debug, PartialEq)]
pub struct RealGrid {
    pub n_y: usize,
    pub n_z: usize,
    pub data: Vec<f64>,
}

impl RealGrid {
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.data[flat_index(n, m, self.n_y)]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid index of the maximum; the lowest flat index wins ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, &x) in self.data.iter().enumerate() {
            if x > self.data[best] {
                best = k;
            }
        }
        (best % self.n_y, best / self.n_y)
    }

    /// CSV text with one row per `n` (u index) and one column per `m`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for n in 0..self.n_y {
            let row: Vec<String> = (0..self.n_z).map(|m| format!("{:.9e}", self.get(n, m))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x.abs() <= 1.0) {
        return Err(Error::domain(format!("{name} = {x} outside [-1, 1]")));
    }
    Ok(())
}

fn check_range(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::domain(format!("range must be positive, got {r}")));
    }
    Ok(())
}

/// 1D separable Fresnel steering vector along one axis:
/// `exp{-j k (-d x δ + d^2/(2r) (1 - x^2) δ^2)} / sqrt(n)`.
pub fn axis_steering(n: usize, k: f64, d: f64, x: f64, r: f64) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    let curv = d * d / (2.0 * r) * (1.0 - x * x);
    axis_offsets(n).into_iter().map(|o| Complex64::from_polar(scale, -k * (-d * x * o + curv * o * o))).collect()
}

/// Separable Fresnel approximation `(b_y(u, r), b_z(v, r))` of the steering
/// vector, dropping the mixed `u v δ_i δ_j` term.
pub fn separable_steering(geom: &ArrayGeometry, u: f64, v: f64, r: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    check_unit("u", u)?;
    check_unit("v", v)?;
    check_range(r)?;
    let k = geom.wavenumber();
    let d = geom.spacing_m();
    Ok((axis_steering(geom.n_y(), k, d, u, r), axis_steering(geom.n_z(), k, d, v, r)))
}

/// Kronecker assembly of separable factors in column-stacked order.
pub fn kron_separable(b_y: &[Complex64], b_z: &[Complex64]) -> ChannelVector {
    let mut out = Vec::with_capacity(b_y.len() * b_z.len());
    for z in b_z {
        for y in b_y {
            out.push(y * z);
        }
    }
    ChannelVector::new(out)
}

/// Which steering model a beam pattern uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternModel {
    Exact,
    Separable,
}

/// Beam pattern `|b^H a(u_n, v_m)|` over the DFT grid.
pub fn beam_pattern(
    geom: &ArrayGeometry,
    path: &SphericalPoint,
    book: &DftCodebook,
    model: PatternModel,
) -> Result<RealGrid> {
    let (ny, nz) = (geom.n_y(), geom.n_z());
    match model {
        PatternModel::Exact => {
            let b = steering_vector(geom, path)?;
            Ok(book.to_beamspace(&b)?.magnitudes())
        }
        PatternModel::Separable => {
            let (by, bz) = separable_steering(geom, path.u(), path.v(), path.r)?;
            let gy: Vec<f64> = (0..ny).map(|n| crate::channel::inner(&by, book.ay_column(n)).norm()).collect();
            let gz: Vec<f64> = (0..nz).map(|m| crate::channel::inner(&bz, book.az_column(m)).norm()).collect();
            let mut data = Vec::with_capacity(ny * nz);
            for g in &gz {
                for f in &gy {
                    data.push(f * g);
                }
            }
            Ok(RealGrid { n_y: ny, n_z: nz, data })
        }
    }
}

/// How the 6-dB threshold level is referenced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthReference {
    /// Half of the response at the true spatial variable.
    TrueVariable,
    /// Half of the RMS plateau level: the RMS response over the interval
    /// found with [`WidthReference::TrueVariable`].
    PlateauRms,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthOptions {
    pub grid_points: usize,
    pub reference: WidthReference,
}

impl Default for WidthOptions {
    fn default() -> Self {
        Self { grid_points: 2048, reference: WidthReference::PlateauRms }
    }
}

/// Result of a numeric 6-dB width measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LobeWidth {
    pub width: f64,
    pub lower: f64,
    pub upper: f64,
    /// Response level the threshold is half of.
    pub level: f64,
    /// Another part of the superlevel set lies outside the reported interval.
    pub disconnected: bool,
    /// The response vanished at the true variable; width is reported as 0.
    pub degenerate: bool,
}

struct AxisResponse {
    conj_b: Vec<Complex64>,
    offsets: Vec<f64>,
    kd: f64,
    scale: f64,
}

impl AxisResponse {
    fn new(n: usize, k: f64, d: f64, x0: f64, r: f64) -> Self {
        let b = axis_steering(n, k, d, x0, r);
        Self {
            conj_b: b.iter().map(|c| c.conj()).collect(),
            offsets: axis_offsets(n),
            kd: k * d,
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    /// `|b^H a(x)|`.
    fn eval(&self, x: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (cb, &o) in self.conj_b.iter().zip(&self.offsets) {
            acc += cb * Complex64::from_polar(1.0, self.kd * x * o);
        }
        acc.norm() * self.scale
    }
}

fn contiguous(g: &[f64], start: usize, th: f64) -> (usize, usize) {
    let mut lo = start;
    while lo > 0 && g[lo - 1] >= th {
        lo -= 1;
    }
    let mut hi = start;
    while hi + 1 < g.len() && g[hi + 1] >= th {
        hi += 1;
    }
    (lo, hi)
}

// Crossing of `f = th` between `a` (below) and `b` (at or above).
fn bisect(resp: &AxisResponse, th: f64, mut below: f64, mut above: f64) -> f64 {
    for _ in 0..48 {
        let mid = 0.5 * (below + above);
        if resp.eval(mid) >= th {
            above = mid;
        } else {
            below = mid;
        }
    }
    0.5 * (below + above)
}

/// Numeric 6-dB width of the axis-wise normalized response of a path at
/// spatial variable `x0` and range `r`, using default [`WidthOptions`].
pub fn lobe_width_numeric(geom: &ArrayGeometry, axis: Axis, x0: f64, r: f64) -> Result<LobeWidth> {
    lobe_width_numeric_with(geom, axis, x0, r, &WidthOptions::default())
}

pub fn lobe_width_numeric_with(
    geom: &ArrayGeometry,
    axis: Axis,
    x0: f64,
    r: f64,
    opts: &WidthOptions,
) -> Result<LobeWidth> {
    check_unit("spatial variable", x0)?;
    check_range(r)?;
    if opts.grid_points < 2 {
        return Err(Error::domain("width grid needs at least two points"));
    }
    let n = match axis {
        Axis::Y => geom.n_y(),
        Axis::Z => geom.n_z(),
    };
    let resp = AxisResponse::new(n, geom.wavenumber(), geom.spacing_m(), x0, r);
    let step = 2.0 / (opts.grid_points - 1) as f64;
    let xs: Vec<f64> = (0..opts.grid_points).map(|i| -1.0 + i as f64 * step).collect();
    let g: Vec<f64> = xs.iter().map(|&x| resp.eval(x)).collect();
    let g0 = resp.eval(x0);
    if !(g0 > 1e-12) {
        return Ok(LobeWidth { width: 0.0, lower: x0, upper: x0, level: g0, disconnected: false, degenerate: true });
    }
    let i0 = (((x0 + 1.0) / step).round() as usize).min(opts.grid_points - 1);

    let mut level = g0;
    let mut start = i0;
    let (mut lo, mut hi) = contiguous(&g, i0, 0.5 * level);
    if opts.reference == WidthReference::PlateauRms {
        let seg = &g[lo..=hi];
        level = (seg.iter().map(|x| x * x).sum::<f64>() / seg.len() as f64).sqrt();
        if g[start] < 0.5 * level {
            // center sits in a ripple null; start from the segment peak
            start = lo + seg.iter().enumerate().fold(0, |b, (k, &x)| if x > seg[b] { k } else { b });
        }
        (lo, hi) = contiguous(&g, start, 0.5 * level);
    }
    let th = 0.5 * level;
    let lower = if lo == 0 { -1.0 } else { bisect(&resp, th, xs[lo - 1], xs[lo]) };
    let upper = if hi + 1 == g.len() { 1.0 } else { bisect(&resp, th, xs[hi + 1], xs[hi]) };
    let disconnected = g.iter().enumerate().any(|(k, &x)| (k < lo || k > hi) && x >= th);
    Ok(LobeWidth { width: upper - lower, lower, upper, level, disconnected, degenerate: false })
}

/// Closed-form 6-dB width `N_axis d (1 - x^2) / r`.
pub fn lobe_width_closed_form(geom: &ArrayGeometry, axis: Axis, x: f64, r: f64) -> Result<f64> {
    check_unit("spatial variable", x)?;
    check_range(r)?;
    let n = match axis {
        Axis::Y => geom.n_y(),
        Axis::Z => geom.n_z(),
    } as f64;
    Ok(n * geom.spacing_m() * (1.0 - x * x) / r)
}

/// Inclusive index rectangle on the DFT grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexBox {
    pub n_lo: usize,
    pub n_hi: usize,
    pub m_lo: usize,
    pub m_hi: usize,
}

impl IndexBox {
    pub fn contains(&self, n: usize, m: usize) -> bool {
        (self.n_lo..=self.n_hi).contains(&n) && (self.m_lo..=self.m_hi).contains(&m)
    }

    pub fn cells(&self) -> usize {
        (self.n_hi - self.n_lo + 1) * (self.m_hi - self.m_lo + 1)
    }
}

/// Main-lobe summary of one path's exact beam pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LobeReport {
    pub peak_index: (usize, usize),
    pub peak_u: f64,
    pub peak_v: f64,
    pub peak_gain: f64,
    /// Numeric 6-dB widths along each axis.
    pub width_u: f64,
    pub width_v: f64,
    pub closed_form_width_u: f64,
    pub closed_form_width_v: f64,
    /// Bounding box of the 4-connected half-peak region around the peak.
    pub support_box: IndexBox,
    pub plateau_cells: usize,
    /// `plateau_cells / support_box.cells()`; 1 for a perfect rectangle.
    pub fill_ratio: f64,
}

/// 4-connected component of cells `>= threshold` that contains `seed`.
pub fn connected_component(grid: &RealGrid, seed: (usize, usize), threshold: f64) -> Vec<(usize, usize)> {
    let (ny, nz) = (grid.n_y, grid.n_z);
    let mut seen = vec![false; ny * nz];
    let mut out = Vec::new();
    if grid.get(seed.0, seed.1) < threshold {
        return out;
    }
    let mut queue = VecDeque::from([seed]);
    seen[flat_index(seed.0, seed.1, ny)] = true;
    while let Some((n, m)) = queue.pop_front() {
        out.push((n, m));
        let mut push = |a: usize, b: usize| {
            let k = flat_index(a, b, ny);
            if !seen[k] && grid.data[k] >= threshold {
                seen[k] = true;
                queue.push_back((a, b));
            }
        };
        if n > 0 {
            push(n - 1, m);
        }
        if n + 1 < ny {
            push(n + 1, m);
        }
        if m > 0 {
            push(n, m - 1);
        }
        if m + 1 < nz {
            push(n, m + 1);
        }
    }
    out
}

pub fn lobe_report(geom: &ArrayGeometry, book: &DftCodebook, path: &SphericalPoint) -> Result<LobeReport> {
    let pattern = beam_pattern(geom, path, book, PatternModel::Exact)?;
    let (pn, pm) = pattern.argmax();
    let peak = pattern.get(pn, pm);
    let cells = connected_component(&pattern, (pn, pm), 0.5 * peak);
    let support_box = IndexBox {
        n_lo: cells.iter().map(|c| c.0).min().unwrap_or(pn),
        n_hi: cells.iter().map(|c| c.0).max().unwrap_or(pn),
        m_lo: cells.iter().map(|c| c.1).min().unwrap_or(pm),
        m_hi: cells.iter().map(|c| c.1).max().unwrap_or(pm),
    };
    let (u, v) = (path.u(), path.v());
    Ok(LobeReport {
        peak_index: (pn, pm),
        peak_u: book.grid_u()[pn],
        peak_v: book.grid_v()[pm],
        peak_gain: peak,
        width_u: lobe_width_numeric(geom, Axis::Y, u, path.r)?.width,
        width_v: lobe_width_numeric(geom, Axis::Z, v, path.r)?.width,
        closed_form_width_u: lobe_width_closed_form(geom, Axis::Y, u, path.r)?,
        closed_form_width_v: lobe_width_closed_form(geom, Axis::Z, v, path.r)?,
        plateau_cells: cells.len(),
        fill_ratio: cells.len() as f64 / support_box.cells() as f64,
        support_box,
    })
}

/// `L N_y N_z d^2 / (Δ_y Δ_z)`, the multiplier of `E[(1-u^2)(1-v^2)/r^2]`.
pub fn sparsity_prefactor(book: &DftCodebook, l_paths: usize) -> f64 {
    let g = book.geometry();
    let d = g.spacing_m();
    l_paths as f64 * (g.n_y() * g.n_z()) as f64 * d * d / (book.spacing_u() * book.spacing_v())
}

/// Monte Carlo estimate of the expected number of active DFT coefficients,
/// `E[K] ≈ L N_y N_z d^2 / (Δ_y Δ_z) * E[(1-u^2)(1-v^2)/r^2]` with
/// `u = sqrt(1-v^2) s`.
pub fn expected_sparsity(
    geom: &ArrayGeometry,
    book: &DftCodebook,
    l_paths: usize,
    dist: &SceneDistribution,
    mc_samples: usize,
    seed: u64,
) -> Result<f64> {
    if mc_samples < 1 {
        return Err(Error::domain("need at least one Monte Carlo sample"));
    }
    dist.validate()?;
    let bounds = dist.range_bounds(geom)?;
    let mut rng = rng::stream(seed);
    let mut acc = 0.0;
    for _ in 0..mc_samples {
        let (v, s, r) = crate::channel::draw_location(&mut rng, dist, bounds);
        let u = (1.0 - v * v).sqrt() * s;
        acc += (1.0 - u * u) * (1.0 - v * v) / (r * r);
    }
    Ok(sparsity_prefactor(book, l_paths) * acc / mc_samples as f64)
}

/// Number of DFT cells where at least one path reaches half of its own
/// beamspace peak.
pub fn empirical_active_count(geom: &ArrayGeometry, book: &DftCodebook, scene: &Scene) -> Result<usize> {
    let mut active = vec![false; geom.n_total()];
    for path in &scene.paths {
        let mag = book.to_beamspace(&steering_vector(geom, &path.point)?)?.magnitudes();
        let th = 0.5 * mag.max();
        for (a, &x) in active.iter_mut().zip(&mag.data) {
            *a |= x >= th;
        }
    }
    Ok(active.iter().filter(|&&a| a).count())
}

/// Patterns for many paths in parallel, in input order.
pub fn beam_patterns(
    geom: &ArrayGeometry,
    book: &DftCodebook,
    paths: &[SphericalPoint],
    model: PatternModel,
) -> Result<Vec<RealGrid>> {
    paths.par_iter().map(|p| beam_pattern(geom, p, book, model)).collect()
}
