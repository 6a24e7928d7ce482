#ifndef NFBEAM_H
#define NFBEAM_H

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum NfbMethod {
  NFB_METHOD_L2 = 0,
  NFB_METHOD_LASSO = 1,
  NFB_METHOD_LASSO_TV = 2,
} NfbMethod;

typedef enum NfbPatternModel {
  NFB_PATTERN_MODEL_EXACT = 0,
  NFB_PATTERN_MODEL_SEPARABLE = 1,
} NfbPatternModel;

typedef enum NfbProfile {
  NFB_PROFILE_DESK = 0,
  NFB_PROFILE_PAPER = 1,
} NfbProfile;

// Result code of every fallible call.
typedef enum NfbStatus {
  NFB_STATUS_OK = 0,
  NFB_STATUS_NULL_POINTER = 1,
  NFB_STATUS_INVALID_ARGUMENT = 2,
  NFB_STATUS_CONFIG = 3,
  NFB_STATUS_NUMERICAL = 4,
  NFB_STATUS_BUFFER_TOO_SMALL = 5,
  NFB_STATUS_IO = 6,
  NFB_STATUS_PANIC = 7,
} NfbStatus;

// Opaque experiment configuration.
typedef struct NfbExperiment NfbExperiment;

// Opaque array geometry with its DFT codebook.
typedef struct NfbGeometry NfbGeometry;

// Opaque pilot sensing operator (`M x N`).
typedef struct NfbSensing NfbSensing;

// Derived quantities of an array geometry.
typedef struct NfbGeometryInfo {
  size_t n_y;
  size_t n_z;
  double carrier_freq_hz;
  double wavelength_m;
  double spacing_m;
  double aperture_m;
  double rayleigh_distance_m;
  double fresnel_distance_m;
} NfbGeometryInfo;

// Location distribution: `v = cos θ` and `s = sin φ` uniform on their
// intervals, range uniform on `[r_min_m, r_max_m]`.
typedef struct NfbSceneDistribution {
  double v_lo;
  double v_hi;
  double s_lo;
  double s_hi;
  double r_min_m;
  double r_max_m;
} NfbSceneDistribution;

// Complex number with the memory layout `{ double re; double im; }`.
typedef struct NfbComplex {
  double re;
  double im;
} NfbComplex;

// Concrete estimator settings; fill with [`nfb_estimator_params_default`].
typedef struct NfbEstimatorParams {
  double lambda1;
  double lambda_tv;
  size_t top_k;
  size_t dilation_y;
  size_t dilation_z;
  size_t lasso_max_iters;
  double lasso_tol;
  size_t tv_max_iters;
  double tv_tol;
  size_t dykstra_sweeps;
  // `true` lets chain ends next to an inactive in-array cell move freely.
  bool tv_any_endpoint;
  double l2_loading;
} NfbEstimatorParams;

// Per-estimate summary.
typedef struct NfbEstimateInfo {
  size_t support_size;
  double residual_norm;
  size_t lasso_iterations;
  bool lasso_converged;
  double kkt_residual;
  size_t tv_iterations;
  bool tv_converged;
  bool zero_estimate;
} NfbEstimateInfo;

// Outcome of one harness trial.
typedef struct NfbTrialResult {
  double nmse;
  double rho_db;
  size_t m_pilots;
  uint64_t scene_seed;
  uint64_t sensing_seed;
  uint64_t noise_seed;
  bool failed;
} NfbTrialResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *nfb_version(void);

// Message of the last failing call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *nfb_last_error_message(void);

// Release a string returned through a `char **` out-parameter.
//
// # Safety
// `s` must be NULL or a pointer obtained from this library and not yet freed.
void nfb_string_free(char *s);

// Create a `n_y x n_z` half-wavelength planar array at `carrier_freq_hz`.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum NfbStatus nfb_geometry_new(size_t n_y,
                                size_t n_z,
                                double carrier_freq_hz,
                                struct NfbGeometry **out);

// # Safety
// `g` must be NULL or a handle from [`nfb_geometry_new`] not yet freed.
void nfb_geometry_free(struct NfbGeometry *g);

// # Safety
// `g` must be a live geometry handle and `info` writable.
enum NfbStatus nfb_geometry_info(const struct NfbGeometry *g, struct NfbGeometryInfo *info);

// Default scene distribution for a geometry: `v, s ~ U[-1/2, 1/2]`, range
// from the Fresnel distance to one twentieth of the Rayleigh distance.
//
// # Safety
// `g` must be a live geometry handle and `out` writable.
enum NfbStatus nfb_scene_distribution_default(const struct NfbGeometry *g,
                                              struct NfbSceneDistribution *out);

// Beam-pattern magnitudes `|b^H a(u_n, v_m)|` of a path at `(u, v, r)` over
// the DFT grid. `out` must hold `n_y * n_z` values.
//
// # Safety
// `g` must be a live geometry handle; `out` must point to `out_len` doubles.
enum NfbStatus nfb_beam_pattern(const struct NfbGeometry *g,
                                double u,
                                double v,
                                double r,
                                enum NfbPatternModel model,
                                double *out,
                                size_t out_len);

// Monte Carlo expected sparsity of an `l_paths`-path channel.
//
// # Safety
// `g`, `dist` must be valid; `out` writable.
enum NfbStatus nfb_expected_sparsity(const struct NfbGeometry *g,
                                     size_t l_paths,
                                     const struct NfbSceneDistribution *dist,
                                     size_t mc_samples,
                                     uint64_t seed,
                                     double *out);

// Draw a random `l_paths`-path scene and write its channel vector (length
// `N`, unit-power path gains before summation).
//
// # Safety
// `g`, `dist` must be valid; `out` must point to `out_len` values.
enum NfbStatus nfb_random_channel(const struct NfbGeometry *g,
                                  size_t l_paths,
                                  const struct NfbSceneDistribution *dist,
                                  uint64_t seed,
                                  struct NfbComplex *out,
                                  size_t out_len);

// Array-domain vector to DFT beamspace coefficients (`s = F^H h`).
//
// # Safety
// `h` must point to `len` values, `out` to `len` writable values, with
// `len == n_y * n_z`.
enum NfbStatus nfb_to_beamspace(const struct NfbGeometry *g,
                                const struct NfbComplex *h,
                                struct NfbComplex *out,
                                size_t len);

// DFT beamspace coefficients to the array domain (`h = F s`).
//
// # Safety
// As for [`nfb_to_beamspace`].
enum NfbStatus nfb_from_beamspace(const struct NfbGeometry *g,
                                  const struct NfbComplex *s,
                                  struct NfbComplex *out,
                                  size_t len);

// Random `m_pilots x N` Gaussian sensing operator for a geometry.
//
// # Safety
// `g` must be a live geometry handle and `out` writable.
enum NfbStatus nfb_sensing_new(const struct NfbGeometry *g,
                               size_t m_pilots,
                               uint64_t seed,
                               struct NfbSensing **out);

// Sensing operator from a caller-supplied row-major `rows x cols` matrix.
//
// # Safety
// `data` must point to `rows * cols` values and `out` be writable.
enum NfbStatus nfb_sensing_from_matrix(const struct NfbComplex *data,
                                       size_t rows,
                                       size_t cols,
                                       struct NfbSensing **out);

// # Safety
// `s` must be NULL or a live sensing handle.
void nfb_sensing_free(struct NfbSensing *s);

// # Safety
// `s` must be a live sensing handle; `rows`, `cols` writable.
enum NfbStatus nfb_sensing_dims(const struct NfbSensing *s, size_t *rows, size_t *cols);

// Copy the operator out in row-major order.
//
// # Safety
// `out` must point to `out_len` writable values.
enum NfbStatus nfb_sensing_matrix(const struct NfbSensing *s,
                                  struct NfbComplex *out,
                                  size_t out_len);

// Noisy pilot measurement `y = Φ s + w` at `snr_db` (`+inf` for none).
// Writes `M` values to `y_out` and the noise variance to `noise_var`.
//
// # Safety
// `g` and `s` live handles; `beamspace` points to `N` values; `y_out` to
// `y_len` writable values; `noise_var` NULL or writable.
enum NfbStatus nfb_measure(const struct NfbGeometry *g,
                           const struct NfbSensing *s,
                           const struct NfbComplex *beamspace,
                           double snr_db,
                           uint64_t seed,
                           struct NfbComplex *y_out,
                           size_t y_len,
                           double *noise_var);

// Default estimator settings (fixed `λ₁`; scale it to the noise level).
//
// # Safety
// `out` must be writable.
enum NfbStatus nfb_estimator_params_default(struct NfbEstimatorParams *out);

// Recover beamspace coefficients from `M` pilots. Writes `N` coefficients
// to `s_out` and, when `info` is not NULL, a diagnostics summary.
//
// # Safety
// `g`, `s`, `params` must be valid; `y` points to `y_len` values; `s_out`
// to `s_len` writable values.
enum NfbStatus nfb_estimate(const struct NfbGeometry *g,
                            const struct NfbSensing *s,
                            const struct NfbComplex *y,
                            size_t y_len,
                            enum NfbMethod method,
                            const struct NfbEstimatorParams *params,
                            struct NfbComplex *s_out,
                            size_t s_len,
                            struct NfbEstimateInfo *info);

// Built-in experiment profile.
//
// # Safety
// `out` must be writable.
enum NfbStatus nfb_experiment_new(enum NfbProfile profile, struct NfbExperiment **out);

// Experiment from a JSON document; missing fields keep the defaults of the
// profile named in the document (desk when absent).
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum NfbStatus nfb_experiment_from_json(const char *json, struct NfbExperiment **out);

// # Safety
// `e` must be NULL or a live experiment handle.
void nfb_experiment_free(struct NfbExperiment *e);

// # Safety
// `e` must be a live experiment handle.
enum NfbStatus nfb_experiment_set_seed(struct NfbExperiment *e, uint64_t master_seed);

// Resolved configuration as pretty JSON; free with [`nfb_string_free`].
//
// # Safety
// `e` must be a live experiment handle and `out` writable.
enum NfbStatus nfb_experiment_to_json(const struct NfbExperiment *e, char **out);

// Configuration hash (16 hex digits); free with [`nfb_string_free`].
//
// # Safety
// `e` must be a live experiment handle and `out` writable.
enum NfbStatus nfb_experiment_hash(const struct NfbExperiment *e, char **out);

// Run one seeded trial of one method at an operating point, with the
// experiment's scene distribution, path count and estimator rules.
//
// # Safety
// `e` must be a live experiment handle and `out` writable.
enum NfbStatus nfb_experiment_run_trial(const struct NfbExperiment *e,
                                        enum NfbMethod method,
                                        double snr_db,
                                        double m_over_n,
                                        size_t trial,
                                        struct NfbTrialResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NFBEAM_H */
