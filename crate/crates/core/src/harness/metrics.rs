//! Per-realization error metrics.

use crate::channel::ChannelVector;
use crate::error::{Error, Result};

/// Value reported for `ρ` when the estimate is orthogonal to the channel.
pub const RHO_FLOOR_DB: f64 = -300.0;

/// `‖ĥ - h‖^2 / ‖h‖^2`.
pub fn compute_nmse(h_hat: &ChannelVector, h: &ChannelVector) -> Result<f64> {
    check_len(h_hat, h)?;
    let den = h.norm().powi(2);
    if !(den > 0.0) {
        return Err(Error::ZeroVector("true channel"));
    }
    let num: f64 = h_hat.entries().iter().zip(h.entries()).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(num / den)
}

/// `|ĥ^H h| / (‖ĥ‖ ‖h‖)`, in `[0, 1]`.
pub fn compute_rho_linear(h_hat: &ChannelVector, h: &ChannelVector) -> Result<f64> {
    check_len(h_hat, h)?;
    let (a, b) = (h_hat.norm(), h.norm());
    if !(a > 0.0) {
        return Err(Error::ZeroVector("estimated channel"));
    }
    if !(b > 0.0) {
        return Err(Error::ZeroVector("true channel"));
    }
    Ok((h_hat.inner(h).norm() / (a * b)).min(1.0))
}

/// `20 log10 ρ`, floored at [`RHO_FLOOR_DB`].
pub fn compute_rho_db(h_hat: &ChannelVector, h: &ChannelVector) -> Result<f64> {
    let rho = compute_rho_linear(h_hat, h)?;
    Ok(if rho > 0.0 { (20.0 * rho.log10()).max(RHO_FLOOR_DB) } else { RHO_FLOOR_DB })
}

fn check_len(a: &ChannelVector, b: &ChannelVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), got: a.len() });
    }
    Ok(())
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Median of the values; independent of input order.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
