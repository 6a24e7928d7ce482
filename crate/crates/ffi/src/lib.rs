//! C ABI over `nfbeam`.
//!
//! Conventions shared by every function:
//!
//! * The return value is an [`NfbStatus`]. On anything other than
//!   `NFB_STATUS_OK`, a message is available from [`nfb_last_error_message`]
//!   on the calling thread until the next failing call on that thread.
//! * Objects are opaque handles created by `*_new` functions and released by
//!   the matching `*_free`. Passing `NULL` to a `*_free` is a no-op.
//! * Complex arrays are [`NfbComplex`] values; beamspace and channel arrays
//!   are flattened with index `i + j * n_y`.
//! * Output buffers come with their capacity; when too small the call fails
//!   with `NFB_STATUS_BUFFER_TOO_SMALL` and the error message names the
//!   required length.
//! * Strings returned through `char **` are owned by the caller and must be
//!   released with [`nfb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::DMatrix;
use num_complex::Complex64;

use nfbeam::beamspace::{beam_pattern, expected_sparsity, BeamspaceMatrix, DftCodebook, PatternModel};
use nfbeam::channel::{sample_scene, synthesize_channel, ChannelVector, RangeSpec, SceneDistribution, SphericalPoint};
use nfbeam::error::Error;
use nfbeam::estimator::{
    estimate_channel, make_sensing, measure, EstimatorConfig, IterControl, Method, SensingOperator, TvNeighborRule,
};
use nfbeam::geometry::ArrayGeometry;
use nfbeam::harness::{run_trial, ExperimentConfig, Profile};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NfbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Io = 6,
    Panic = 7,
}

/// Complex number with the memory layout `{ double re; double im; }`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NfbComplex {
    pub re: f64,
    pub im: f64,
}

const _: () = assert!(std::mem::size_of::<NfbComplex>() == std::mem::size_of::<Complex64>());

impl From<Complex64> for NfbComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<NfbComplex> for Complex64 {
    fn from(z: NfbComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Derived quantities of an array geometry.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NfbGeometryInfo {
    pub n_y: usize,
    pub n_z: usize,
    pub carrier_freq_hz: f64,
    pub wavelength_m: f64,
    pub spacing_m: f64,
    pub aperture_m: f64,
    pub rayleigh_distance_m: f64,
    pub fresnel_distance_m: f64,
}

/// Location distribution: `v = cos θ` and `s = sin φ` uniform on their
/// intervals, range uniform on `[r_min_m, r_max_m]`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NfbSceneDistribution {
    pub v_lo: f64,
    pub v_hi: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub r_min_m: f64,
    pub r_max_m: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NfbMethod {
    L2 = 0,
    Lasso = 1,
    LassoTv = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NfbPatternModel {
    Exact = 0,
    Separable = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NfbProfile {
    Desk = 0,
    Paper = 1,
}

/// Concrete estimator settings; fill with [`nfb_estimator_params_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct NfbEstimatorParams {
    pub lambda1: f64,
    pub lambda_tv: f64,
    pub top_k: usize,
    pub dilation_y: usize,
    pub dilation_z: usize,
    pub lasso_max_iters: usize,
    pub lasso_tol: f64,
    pub tv_max_iters: usize,
    pub tv_tol: f64,
    pub dykstra_sweeps: usize,
    /// `true` lets chain ends next to an inactive in-array cell move freely.
    pub tv_any_endpoint: bool,
    pub l2_loading: f64,
}

/// Per-estimate summary.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NfbEstimateInfo {
    pub support_size: usize,
    pub residual_norm: f64,
    pub lasso_iterations: usize,
    pub lasso_converged: bool,
    pub kkt_residual: f64,
    pub tv_iterations: usize,
    pub tv_converged: bool,
    pub zero_estimate: bool,
}

/// Outcome of one harness trial.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NfbTrialResult {
    pub nmse: f64,
    pub rho_db: f64,
    pub m_pilots: usize,
    pub scene_seed: u64,
    pub sensing_seed: u64,
    pub noise_seed: u64,
    pub failed: bool,
}

/// Opaque array geometry with its DFT codebook.
pub struct NfbGeometry {
    geom: ArrayGeometry,
    book: DftCodebook,
}

/// Opaque pilot sensing operator (`M x N`).
pub struct NfbSensing {
    op: SensingOperator,
}

/// Opaque experiment configuration.
pub struct NfbExperiment {
    cfg: ExperimentConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean: Vec<u8> = msg.bytes().filter(|&b| b != 0).collect();
    let c = CString::new(clean).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(NfbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) | Error::Json(_) => NfbStatus::Config,
            Error::Numerical(_) => NfbStatus::Numerical,
            Error::Io { .. } | Error::Csv(_) => NfbStatus::Io,
            _ => NfbStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NfbStatus::NullPointer, format!("{what} is NULL"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(NfbStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NfbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NfbStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&format!("internal panic: {msg}"));
            NfbStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, cap: usize, needed: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if cap < needed {
        return Err(Fail(NfbStatus::BufferTooSmall, format!("{what} holds {cap} elements, {needed} required")));
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

fn to_complex(xs: &[NfbComplex]) -> Vec<Complex64> {
    xs.iter().map(|&z| z.into()).collect()
}

fn write_complex(dst: &mut [NfbComplex], src: &[Complex64]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = s.into();
    }
}

fn method_of(m: NfbMethod) -> Method {
    match m {
        NfbMethod::L2 => Method::L2,
        NfbMethod::Lasso => Method::Lasso,
        NfbMethod::LassoTv => Method::LassoTv,
    }
}

fn distribution(d: &NfbSceneDistribution) -> SceneDistribution {
    SceneDistribution {
        v_range: (d.v_lo, d.v_hi),
        s_range: (d.s_lo, d.s_hi),
        range: RangeSpec::Meters { min: d.r_min_m, max: d.r_max_m },
    }
}

fn params_to_config(p: &NfbEstimatorParams) -> EstimatorConfig {
    EstimatorConfig {
        lambda1: p.lambda1,
        lambda_tv: p.lambda_tv,
        top_k: p.top_k,
        dilation_y: p.dilation_y,
        dilation_z: p.dilation_z,
        lasso: IterControl { max_iters: p.lasso_max_iters, tol: p.lasso_tol },
        tv: IterControl { max_iters: p.tv_max_iters, tol: p.tv_tol },
        dykstra_sweeps: p.dykstra_sweeps,
        neighbor_rule: if p.tv_any_endpoint { TvNeighborRule::AnyEndpoint } else { TvNeighborRule::BothEndpoints },
        l2_loading: p.l2_loading,
    }
}

unsafe fn give_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let out = out_ref(out, "out")?;
    let c = CString::new(s).map_err(|_| invalid("string contains NUL"))?;
    *out = c.into_raw();
    Ok(())
}

// ---------------------------------------------------------------------------
// Library-level

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nfb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failing call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nfb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned through a `char **` out-parameter.
///
/// # Safety
/// `s` must be NULL or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nfb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// Geometry

/// Create a `n_y x n_z` half-wavelength planar array at `carrier_freq_hz`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn nfb_geometry_new(
    n_y: usize,
    n_z: usize,
    carrier_freq_hz: f64,
    out: *mut *mut NfbGeometry,
) -> NfbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let geom = ArrayGeometry::new(n_y, n_z, carrier_freq_hz)?;
        let book = DftCodebook::new(&geom);
        *out = Box::into_raw(Box::new(NfbGeometry { geom, book }));
        Ok(())
    })
}

/// # Safety
/// `g` must be NULL or a handle from [`nfb_geometry_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nfb_geometry_free(g: *mut NfbGeometry) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live geometry handle and `info` writable.
#[no_mangle]
pub unsafe extern "C" fn nfb_geometry_info(g: *const NfbGeometry, info: *mut NfbGeometryInfo) -> NfbStatus {
    guard(|| {
        let g = &deref(g, "geometry")?.geom;
        *out_ref(info, "info")? = NfbGeometryInfo {
            n_y: g.n_y(),
            n_z: g.n_z(),
            carrier_freq_hz: g.carrier_freq_hz(),
            wavelength_m: g.wavelength_m(),
            spacing_m: g.spacing_m(),
            aperture_m: g.aperture_m(),
            rayleigh_distance_m: g.rayleigh_distance(),
            fresnel_distance_m: g.fresnel_distance(),
        };
        Ok(())
    })
}

/// Default scene distribution for a geometry: `v, s ~ U[-1/2, 1/2]`, range
/// from the Fresnel distance to one twentieth of the Rayleigh distance.
///
/// # Safety
/// `g` must be a live geometry handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfb_scene_distribution_default(
    g: *const NfbGeometry,
    out: *mut NfbSceneDistribution,
) -> NfbStatus {
    guard(|| {
        let g = &deref(g, "geometry")?.geom;
        let d = SceneDistribution::standard();
        let (lo, hi) = d.range_bounds(g)?;
        *out_ref(out, "out")? = NfbSceneDistribution {
            v_lo: d.v_range.0,
            v_hi: d.v_range.1,
            s_lo: d.s_range.0,
            s_hi: d.s_range.1,
            r_min_m: lo,
            r_max_m: hi,
        };
        Ok(())
    })
}

/// Beam-pattern magnitudes `|b^H a(u_n, v_m)|` of a path at `(u, v, r)` over
/// the DFT grid. `out` must hold `n_y * n_z` values.
///
/// # Safety
/// `g` must be a live geometry handle; `out` must point to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nfb_beam_pattern(
    g: *const NfbGeometry,
    u: f64,
    v: f64,
    r: f64,
    model: NfbPatternModel,
    out: *mut f64,
    out_len: usize,
) -> NfbStatus {
    guard(|| {
        let g = deref(g, "geometry")?;
        let dst = out_slice(out, out_len, g.geom.n_total(), "out")?;
        let point = SphericalPoint::from_uv(u, v, r)?;
        let model = match model {
            NfbPatternModel::Exact => PatternModel::Exact,
            NfbPatternModel::Separable => PatternModel::Separable,
        };
        let grid = beam_pattern(&g.geom, &point, &g.book, model)?;
        dst.copy_from_slice(&grid.data);
        Ok(())
    })
}

/// Monte Carlo expected sparsity of an `l_paths`-path channel.
///
/// # Safety
/// `g`, `dist` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfb_expected_sparsity(
    g: *const NfbGeometry,
    l_paths: usize,
    dist: *const NfbSceneDistribution,
    mc_samples: usize,
    seed: u64,
    out: *mut f64,
) -> NfbStatus {
    guard(|| {
        let g = deref(g, "geometry")?;
        let dist = distribution(deref(dist, "dist")?);
        let out = out_ref(out, "out")?;
        *out = expected_sparsity(&g.geom, &g.book, l_paths, &dist, mc_samples, seed)?;
        Ok(())
    })
}

/// Draw a random `l_paths`-path scene and write its channel vector (length
/// `N`, unit-power path gains before summation).
///
/// # Safety
/// `g`, `dist` must be valid; `out` must point to `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn nfb_random_channel(
    g: *const NfbGeometry,
    l_paths: usize,
    dist: *const NfbSceneDistribution,
    seed: u64,
    out: *mut NfbComplex,
    out_len: usize,
) -> NfbStatus {
    guard(|| {
        let g = deref(g, "geometry")?;
        let dist = distribution(deref(dist, "dist")?);
        let dst = out_slice(out, out_len, g.geom.n_total(), "out")?;
        let scene = sample_scene(&g.geom, l_paths, seed, &dist)?;
        let h = synthesize_channel(&g.geom, &scene)?;
        write_complex(dst, h.entries());
        Ok(())
    })
}

/// Array-domain vector to DFT beamspace coefficients (`s = F^H h`).
///
/// # Safety
/// `h` must point to `len` values, `out` to `len` writable values, with
/// `len == n_y * n_z`.
#[no_mangle]
pub unsafe extern "C" fn nfb_to_beamspace(
    g: *const NfbGeometry,
    h: *const NfbComplex,
    out: *mut NfbComplex,
    len: usize,
) -> NfbStatus {
    guard(|| {
        let g = deref(g, "geometry")?;
        let n = g.geom.n_total();
        if len != n {
            return Err(invalid(format!("length {len} does not match N = {n}")));
        }
        let src = in_slice(h, len, "h")?;
        let dst = out_slice(out, len, n, "out")?;
        let s = g.book.to_beamspace(&ChannelVector::new(to_complex(src)))?;
        write_complex(dst, s.as_slice());
        Ok(())
    })
}

/// DFT beamspace coefficients to the array domain (`h = F s`).
///
/// # Safety
/// As for [`nfb_to_beamspace`].
#[no_mangle]
pub unsafe extern "C" fn nfb_from_beamspace(
    g: *const NfbGeometry,
    s: *const NfbComplex,
    out: *mut NfbComplex,
    len: usize,
) -> NfbStatus {
    guard(|| {
        let g = deref(g, "geometry")?;
        let n = g.geom.n_total();
        if len != n {
            return Err(invalid(format!("length {len} does not match N = {n}")));
        }
        let src = in_slice(s, len, "s")?;
        let dst = out_slice(out, len, n, "out")?;
        let s = BeamspaceMatrix::from_vec(g.geom.n_y(), g.geom.n_z(), to_complex(src))?;
        let h = g.book.from_beamspace(&s)?;
        write_complex(dst, h.entries());
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Sensing

/// Random `m_pilots x N` Gaussian sensing operator for a geometry.
///
/// # Safety
/// `g` must be a live geometry handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfb_sensing_new(
    g: *const NfbGeometry,
    m_pilots: usize,
    seed: u64,
    out: *mut *mut NfbSensing,
) -> NfbStatus {
    guard(|| {
        let g = deref(g, "geometry")?;
        let out = out_ref(out, "out")?;
        let op = make_sensing(&g.geom, m_pilots, seed)?;
        *out = Box::into_raw(Box::new(NfbSensing { op }));
        Ok(())
    })
}

/// Sensing operator from a caller-supplied row-major `rows x cols` matrix.
///
/// # Safety
/// `data` must point to `rows * cols` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn nfb_sensing_from_matrix(
    data: *const NfbComplex,
    rows: usize,
    cols: usize,
    out: *mut *mut NfbSensing,
) -> NfbStatus {
    guard(|| {
        if rows == 0 || cols == 0 {
            return Err(invalid("matrix dimensions must be nonzero"));
        }
        let len = rows.checked_mul(cols).ok_or_else(|| invalid("matrix dimensions overflow"))?;
        let src = in_slice(data, len, "data")?;
        let out = out_ref(out, "out")?;
        let phi = DMatrix::from_row_iterator(rows, cols, src.iter().map(|&z| Complex64::from(z)));
        *out = Box::into_raw(Box::new(NfbSensing { op: SensingOperator::from_matrix(phi, 0) }));
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a live sensing handle.
#[no_mangle]
pub unsafe extern "C" fn nfb_sensing_free(s: *mut NfbSensing) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live sensing handle; `rows`, `cols` writable.
#[no_mangle]
pub unsafe extern "C" fn nfb_sensing_dims(s: *const NfbSensing, rows: *mut usize, cols: *mut usize) -> NfbStatus {
    guard(|| {
        let s = deref(s, "sensing")?;
        *out_ref(rows, "rows")? = s.op.m_pilots();
        *out_ref(cols, "cols")? = s.op.n_coeffs();
        Ok(())
    })
}

/// Copy the operator out in row-major order.
///
/// # Safety
/// `out` must point to `out_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn nfb_sensing_matrix(s: *const NfbSensing, out: *mut NfbComplex, out_len: usize) -> NfbStatus {
    guard(|| {
        let phi = deref(s, "sensing")?.op.matrix();
        let (r, c) = phi.shape();
        let dst = out_slice(out, out_len, r * c, "out")?;
        for i in 0..r {
            for j in 0..c {
                dst[i * c + j] = phi[(i, j)].into();
            }
        }
        Ok(())
    })
}

/// Noisy pilot measurement `y = Φ s + w` at `snr_db` (`+inf` for none).
/// Writes `M` values to `y_out` and the noise variance to `noise_var`.
///
/// # Safety
/// `g` and `s` live handles; `beamspace` points to `N` values; `y_out` to
/// `y_len` writable values; `noise_var` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn nfb_measure(
    g: *const NfbGeometry,
    s: *const NfbSensing,
    beamspace: *const NfbComplex,
    snr_db: f64,
    seed: u64,
    y_out: *mut NfbComplex,
    y_len: usize,
    noise_var: *mut f64,
) -> NfbStatus {
    guard(|| {
        let g = deref(g, "geometry")?;
        let op = &deref(s, "sensing")?.op;
        let n = g.geom.n_total();
        if op.n_coeffs() != n {
            return Err(invalid(format!("operator has {} columns, geometry N = {n}", op.n_coeffs())));
        }
        let coeffs = in_slice(beamspace, n, "beamspace")?;
        let dst = out_slice(y_out, y_len, op.m_pilots(), "y_out")?;
        let sb = BeamspaceMatrix::from_vec(g.geom.n_y(), g.geom.n_z(), to_complex(coeffs))?;
        let y = measure(op, &sb, snr_db, seed)?;
        write_complex(dst, &y.y);
        if let Some(nv) = noise_var.as_mut() {
            *nv = y.noise_var;
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Estimation

/// Default estimator settings (fixed `λ₁`; scale it to the noise level).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfb_estimator_params_default(out: *mut NfbEstimatorParams) -> NfbStatus {
    guard(|| {
        let d = EstimatorConfig::default();
        *out_ref(out, "out")? = NfbEstimatorParams {
            lambda1: d.lambda1,
            lambda_tv: d.lambda_tv,
            top_k: d.top_k,
            dilation_y: d.dilation_y,
            dilation_z: d.dilation_z,
            lasso_max_iters: d.lasso.max_iters,
            lasso_tol: d.lasso.tol,
            tv_max_iters: d.tv.max_iters,
            tv_tol: d.tv.tol,
            dykstra_sweeps: d.dykstra_sweeps,
            tv_any_endpoint: d.neighbor_rule == TvNeighborRule::AnyEndpoint,
            l2_loading: d.l2_loading,
        };
        Ok(())
    })
}

/// Recover beamspace coefficients from `M` pilots. Writes `N` coefficients
/// to `s_out` and, when `info` is not NULL, a diagnostics summary.
///
/// # Safety
/// `g`, `s`, `params` must be valid; `y` points to `y_len` values; `s_out`
/// to `s_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn nfb_estimate(
    g: *const NfbGeometry,
    s: *const NfbSensing,
    y: *const NfbComplex,
    y_len: usize,
    method: NfbMethod,
    params: *const NfbEstimatorParams,
    s_out: *mut NfbComplex,
    s_len: usize,
    info: *mut NfbEstimateInfo,
) -> NfbStatus {
    guard(|| {
        let g = deref(g, "geometry")?;
        let op = &deref(s, "sensing")?.op;
        let cfg = params_to_config(deref(params, "params")?);
        let y = to_complex(in_slice(y, y_len, "y")?);
        let dst = out_slice(s_out, s_len, g.geom.n_total(), "s_out")?;
        let est = estimate_channel(&g.book, op, &y, &cfg, method_of(method))?;
        write_complex(dst, est.s_hat.as_slice());
        if let Some(info) = info.as_mut() {
            let d = &est.diagnostics;
            *info = NfbEstimateInfo {
                support_size: d.support_size.unwrap_or(0),
                residual_norm: d.residual_norm,
                lasso_iterations: d.lasso.as_ref().map_or(0, |l| l.iterations),
                lasso_converged: d.lasso.as_ref().is_some_and(|l| l.converged),
                kkt_residual: d.lasso.as_ref().map_or(f64::NAN, |l| l.kkt_residual),
                tv_iterations: d.tv.as_ref().map_or(0, |t| t.iterations),
                tv_converged: d.tv.as_ref().is_some_and(|t| t.converged),
                zero_estimate: d.zero_estimate,
            };
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Experiments

/// Built-in experiment profile.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfb_experiment_new(profile: NfbProfile, out: *mut *mut NfbExperiment) -> NfbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let cfg = ExperimentConfig::for_profile(match profile {
            NfbProfile::Desk => Profile::Desk,
            NfbProfile::Paper => Profile::Paper,
        });
        *out = Box::into_raw(Box::new(NfbExperiment { cfg }));
        Ok(())
    })
}

/// Experiment from a JSON document; missing fields keep the defaults of the
/// profile named in the document (desk when absent).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfb_experiment_from_json(json: *const c_char, out: *mut *mut NfbExperiment) -> NfbStatus {
    guard(|| {
        let doc = c_str(json, "json")?;
        let out = out_ref(out, "out")?;
        let cfg = ExperimentConfig::from_json_overlay(None, doc)?;
        cfg.validate()?;
        *out = Box::into_raw(Box::new(NfbExperiment { cfg }));
        Ok(())
    })
}

/// # Safety
/// `e` must be NULL or a live experiment handle.
#[no_mangle]
pub unsafe extern "C" fn nfb_experiment_free(e: *mut NfbExperiment) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// # Safety
/// `e` must be a live experiment handle.
#[no_mangle]
pub unsafe extern "C" fn nfb_experiment_set_seed(e: *mut NfbExperiment, master_seed: u64) -> NfbStatus {
    guard(|| {
        out_ref(e, "experiment")?.cfg.master_seed = master_seed;
        Ok(())
    })
}

/// Resolved configuration as pretty JSON; free with [`nfb_string_free`].
///
/// # Safety
/// `e` must be a live experiment handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfb_experiment_to_json(e: *const NfbExperiment, out: *mut *mut c_char) -> NfbStatus {
    guard(|| {
        let cfg = &deref(e, "experiment")?.cfg;
        give_string(out, cfg.to_json_pretty()?)
    })
}

/// Configuration hash (16 hex digits); free with [`nfb_string_free`].
///
/// # Safety
/// `e` must be a live experiment handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfb_experiment_hash(e: *const NfbExperiment, out: *mut *mut c_char) -> NfbStatus {
    guard(|| {
        let cfg = &deref(e, "experiment")?.cfg;
        give_string(out, cfg.hash())
    })
}

/// Run one seeded trial of one method at an operating point, with the
/// experiment's scene distribution, path count and estimator rules.
///
/// # Safety
/// `e` must be a live experiment handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfb_experiment_run_trial(
    e: *const NfbExperiment,
    method: NfbMethod,
    snr_db: f64,
    m_over_n: f64,
    trial: usize,
    out: *mut NfbTrialResult,
) -> NfbStatus {
    guard(|| {
        let cfg = &deref(e, "experiment")?.cfg;
        let out = out_ref(out, "out")?;
        let r = run_trial(cfg, method_of(method), snr_db, m_over_n, trial)?;
        *out = NfbTrialResult {
            nmse: r.nmse,
            rho_db: r.rho_db,
            m_pilots: r.m_pilots,
            scene_seed: r.seeds.scene,
            sensing_seed: r.seeds.sensing,
            noise_seed: r.seeds.noise,
            failed: r.failed,
        };
        if r.failed {
            return Err(Fail(NfbStatus::Numerical, r.error.unwrap_or_else(|| "trial failed".into())));
        }
        Ok(())
    })
}
