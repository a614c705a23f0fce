//! Sparse drift estimation for high-dimensional Ornstein-Uhlenbeck processes.
//!
//! The model is `dX_t = -A0 X_t dt + dW_t` with a sparse, stable drift matrix
//! `A0`. This crate covers the whole pipeline:
//!
//! * [`model`]: assumption checks, the stationary covariance and the ergodic
//!   constants that feed every bound, plus a random sparse stable generator.
//! * [`simulate`]: exact and Euler trajectories reduced to sufficient statistics.
//! * [`estimate`]: maximum likelihood, Lasso (accelerated proximal gradient) and
//!   Dantzig selector (row-wise simplex) estimators with optimality certificates.
//! * [`bounds`]: closed-form concentration thresholds and oracle constants, cone
//!   membership and an empirical restricted eigenvalue diagnostic.
//! * [`experiments`]: the support-recovery heatmap and relative-error studies.

// `!(x > 0.0)` is used on purpose so that NaN fails validation; dense kernels
// index several arrays in lockstep.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod error;
pub mod estimate;
pub mod experiments;
pub(crate) mod linalg;
pub mod matrix;
pub mod model;
pub mod rng;
pub mod simulate;

pub use bounds::{BoundsReport, ConeSpec};
pub use error::{Error, Result};
pub use estimate::{DantzigConfig, EstimateResult, LassoConfig, Method, SolveStatus};
pub use matrix::Matrix;
pub use model::{ErgodicConstants, HCertificate, ModelSpec};
pub use simulate::{Path, Scheme, SimConfig, SufficientStats};
