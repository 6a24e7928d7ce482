//! Near-field beam training for extremely large uniform planar arrays.
//!
//! The crate synthesizes near-field multipath channels, analyzes their 2D DFT
//! beamspace structure and recovers them from Gaussian-masked pilot
//! measurements with a LASSO, support-dilation and magnitude-TV pipeline.
//!
//! - [`geometry`]: array layout and near-field boundaries
//! - [`channel`]: steering vectors, scenes and channel synthesis
//! - [`beamspace`]: DFT codebook, beam patterns, lobe widths, sparsity
//! - [`estimator`]: sensing model, proximal operators and estimators
//! - [`harness`]: Monte Carlo experiments and file outputs

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamspace;
pub mod channel;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;
