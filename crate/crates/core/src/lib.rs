//! Solver and verification toolkit for the nonlocal p-Laplacian parabolic
//! problem
//!
//! ```text
//!   u_t - div(|∇u|^{p-2} ∇u) = λ f(u) / (∫_Ω f(u) dx)^2,   u = 0 on ∂Ω.
//! ```
//!
//! Two discretizations (conservative finite differences and a sine-basis
//! Galerkin system) feed a diagnostics layer that checks a priori bounds,
//! smallness thresholds, contraction and absorbing-ball behaviour on
//! computed trajectories.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Dense and banded elimination reads better with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod discretization;
pub mod error;
pub mod io;
pub mod linalg;
pub mod problem;
pub mod record;
pub mod time_integration;

pub use error::{Error, Result};
