use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lasso::{solve_lasso, IterControl, LassoDiagnostics};
use super::mask::{dilate_mask, topk_mask};
use super::prox::TvNeighborRule;
use super::sensing::SensingOperator;
use super::tv_refine::{refine, TvDiagnostics, TvProblem};
use crate::beamspace::{BeamspaceMatrix, DftCodebook};
use crate::channel::ChannelVector;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "L2")]
    L2,
    #[serde(rename = "LASSO")]
    Lasso,
    #[serde(rename = "LASSO_TV")]
    LassoTv,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::L2, Method::Lasso, Method::LassoTv];

    pub fn name(self) -> &'static str {
        match self {
            Method::L2 => "L2",
            Method::Lasso => "LASSO",
            Method::LassoTv => "LASSO_TV",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "L2" | "LS" => Ok(Method::L2),
            "LASSO" => Ok(Method::Lasso),
            "LASSO_TV" | "LASSOTV" => Ok(Method::LassoTv),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Hyperparameters for all three estimators. `lambda1` and `lambda_tv`
/// are absolute weights; the harness resolves them from the noise level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub lambda1: f64,
    pub lambda_tv: f64,
    pub top_k: usize,
    pub dilation_y: usize,
    pub dilation_z: usize,
    pub lasso: IterControl,
    pub tv: IterControl,
    pub dykstra_sweeps: usize,
    pub neighbor_rule: TvNeighborRule,
    /// Diagonal loading of the Gram matrix in the minimum-norm solve, as a
    /// multiple of its trace.
    pub l2_loading: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.05,
            lambda_tv: 0.0125,
            top_k: 16,
            dilation_y: 1,
            dilation_z: 1,
            lasso: IterControl { max_iters: 500, tol: 1e-6 },
            tv: IterControl { max_iters: 200, tol: 1e-6 },
            dykstra_sweeps: 3,
            neighbor_rule: TvNeighborRule::BothEndpoints,
            l2_loading: 1e-10,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("invalid estimator setting: {what}")));
        if !(self.lambda1.is_finite() && self.lambda1 >= 0.0) {
            return bad("lambda1 must be finite and >= 0");
        }
        if !(self.lambda_tv.is_finite() && self.lambda_tv >= 0.0) {
            return bad("lambda_tv must be finite and >= 0");
        }
        if self.top_k == 0 {
            return bad("top_k must be >= 1");
        }
        for (name, c) in [("lasso", self.lasso), ("tv", self.tv)] {
            if c.max_iters == 0 || !(c.tol > 0.0) {
                return bad(&format!("{name} iteration control"));
            }
        }
        if self.dykstra_sweeps == 0 {
            return bad("dykstra_sweeps must be >= 1");
        }
        if !(self.l2_loading.is_finite() && self.l2_loading >= 0.0) {
            return bad("l2_loading must be finite and >= 0");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: Method,
    pub lasso: Option<LassoDiagnostics>,
    pub tv: Option<TvDiagnostics>,
    pub support_size: Option<usize>,
    pub residual_norm: f64,
    pub zero_estimate: bool,
}

#[derive(Clone, Debug)]
pub struct Estimate {
    pub method: Method,
    pub s_hat: BeamspaceMatrix,
    pub h_hat: ChannelVector,
    /// `ĥ / ‖ĥ‖`; `None` when the estimate is identically zero.
    pub v_hat: Option<ChannelVector>,
    pub diagnostics: Diagnostics,
}

/// Minimum-norm solution `Φ^H (Φ Φ^H)^{-1} y` by a loaded Cholesky solve
/// with iterative refinement against the unloaded Gram matrix.
pub fn min_norm_solution(phi: &DMatrix<Complex64>, y: &[Complex64], loading: f64) -> Result<Vec<Complex64>> {
    let m = phi.nrows();
    if y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: y.len() });
    }
    let gram = phi * phi.adjoint();
    let trace = (0..m).map(|i| gram[(i, i)].re).sum::<f64>();
    let mut loaded = gram.clone();
    let eps = loading * trace.max(f64::MIN_POSITIVE);
    for i in 0..m {
        loaded[(i, i)] += Complex64::new(eps, 0.0);
    }
    let chol =
        loaded.cholesky().ok_or_else(|| Error::Numerical("pilot Gram matrix is not positive definite".into()))?;
    let yv = DVector::from_column_slice(y);
    let mut x = chol.solve(&yv);
    for _ in 0..3 {
        let r = &yv - &gram * &x;
        x += chol.solve(&r);
    }
    Ok(phi.ad_mul(&x).as_slice().to_vec())
}

fn residual_norm(phi: &DMatrix<Complex64>, y: &[Complex64], s: &[Complex64]) -> f64 {
    (DVector::from_column_slice(y) - phi * DVector::from_column_slice(s)).norm()
}

fn finish(
    book: &DftCodebook,
    op: &SensingOperator,
    y: &[Complex64],
    s: Vec<Complex64>,
    diagnostics: Diagnostics,
) -> Result<Estimate> {
    let mut diagnostics = diagnostics;
    diagnostics.residual_norm = residual_norm(op.matrix(), y, &s);
    let s_hat = BeamspaceMatrix::from_vec(book.n_y(), book.n_z(), s)?;
    let h_hat = book.from_beamspace(&s_hat)?;
    let v_hat = h_hat.normalized();
    diagnostics.zero_estimate = v_hat.is_none();
    Ok(Estimate { method: diagnostics.method, s_hat, h_hat, v_hat, diagnostics })
}

fn check_dims(book: &DftCodebook, op: &SensingOperator, y: &[Complex64]) -> Result<()> {
    let n = book.n_y() * book.n_z();
    if op.n_coeffs() != n {
        return Err(Error::DimensionMismatch { expected: n, got: op.n_coeffs() });
    }
    if y.len() != op.m_pilots() {
        return Err(Error::DimensionMismatch { expected: op.m_pilots(), got: y.len() });
    }
    Ok(())
}

/// Run one estimator.
pub fn estimate_channel(
    book: &DftCodebook,
    op: &SensingOperator,
    y: &[Complex64],
    cfg: &EstimatorConfig,
    method: Method,
) -> Result<Estimate> {
    let mut out = estimate_methods(book, op, y, cfg, &[method])?;
    Ok(out.remove(0))
}

/// Run several estimators on one measurement, sharing the LASSO stage
/// between `Lasso` and `LassoTv`. Results come back in the order requested.
pub fn estimate_methods(
    book: &DftCodebook,
    op: &SensingOperator,
    y: &[Complex64],
    cfg: &EstimatorConfig,
    methods: &[Method],
) -> Result<Vec<Estimate>> {
    cfg.validate()?;
    check_dims(book, op, y)?;
    let phi = op.matrix();
    let needs_lasso = methods.iter().any(|m| matches!(m, Method::Lasso | Method::LassoTv));
    let stage1 = needs_lasso.then(|| solve_lasso(phi, y, cfg.lambda1, cfg.lasso));

    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let est = match method {
            Method::L2 => {
                let s = min_norm_solution(phi, y, cfg.l2_loading)?;
                let d = Diagnostics {
                    method,
                    lasso: None,
                    tv: None,
                    support_size: None,
                    residual_norm: 0.0,
                    zero_estimate: false,
                };
                finish(book, op, y, s, d)?
            }
            Method::Lasso => {
                let sol = stage1.as_ref().expect("stage I computed");
                let d = Diagnostics {
                    method,
                    lasso: Some(sol.diagnostics.clone()),
                    tv: None,
                    support_size: Some(sol.diagnostics.nonzeros),
                    residual_norm: 0.0,
                    zero_estimate: false,
                };
                finish(book, op, y, sol.s.clone(), d)?
            }
            Method::LassoTv => {
                let sol = stage1.as_ref().expect("stage I computed");
                let nnz = sol.diagnostics.nonzeros;
                if nnz == 0 {
                    let d = Diagnostics {
                        method,
                        lasso: Some(sol.diagnostics.clone()),
                        tv: None,
                        support_size: Some(0),
                        residual_norm: 0.0,
                        zero_estimate: true,
                    };
                    finish(book, op, y, sol.s.clone(), d)?
                } else {
                    // top-k among the nonzero coefficients only
                    let s1 = BeamspaceMatrix::from_vec(book.n_y(), book.n_z(), sol.s.clone())?;
                    let seed_mask = topk_mask(&s1, cfg.top_k.min(nnz))?;
                    let mask = dilate_mask(&seed_mask, cfg.dilation_y, cfg.dilation_z);
                    let problem = TvProblem {
                        phi,
                        y,
                        mask: &mask,
                        lambda_tv: cfg.lambda_tv,
                        rule: cfg.neighbor_rule,
                        dykstra_sweeps: cfg.dykstra_sweeps,
                    };
                    let (s, tv) = refine(&problem, &sol.s, cfg.tv)?;
                    let d = Diagnostics {
                        method,
                        lasso: Some(sol.diagnostics.clone()),
                        tv: Some(tv),
                        support_size: Some(mask.count()),
                        residual_norm: 0.0,
                        zero_estimate: false,
                    };
                    finish(book, op, y, s, d)?
                }
            }
        };
        out.push(est);
    }
    Ok(out)
}
