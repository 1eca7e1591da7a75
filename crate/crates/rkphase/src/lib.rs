//! Robust phase retrieval from intensity-only measurements.
//!
//! The library recovers a complex signal `x` from measurements
//! `y = |Ax|^2 + eta + w` (sparse outliers `eta`, bounded noise `w`) by
//! gradient descent on a reverse-KL-divergence loss in the Wirtinger-flow
//! framework, with a matching spectral initializer and optional per-iteration
//! truncation of contaminated measurements. Baseline losses (intensity
//! least-squares, Poisson / forward-KL, reshaped amplitude least-squares)
//! and the classical spectral initializer are included for comparison.
//!
//! Modules mirror the pipeline:
//!
//! - [`core`]: complex vector/matrix aliases, phase-invariant distance,
//!   power iteration, seeded RNG.
//! - [`models`]: Gaussian and coded-diffraction measurement operators,
//!   forward intensity map, noise/outlier injection, loss-surface grids.
//! - [`init`]: classical and reverse-KL spectral initialization.
//! - [`losses`]: loss values and Wirtinger gradients.
//! - [`truncation`]: mean-residual, median-residual and one-sided-log masks.
//! - [`solver`]: the gradient-descent driver and named presets.
//! - [`metrics`]: ARE, success probability, SNR, correlation coefficients.
//! - [`harness`]: seeded Monte-Carlo sweeps over sampling/corruption levels.

// Validation guards are written `!(x > 0.0)` on purpose: the negated form
// also rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod core;
pub mod error;
pub mod harness;
pub mod init;
pub mod losses;
pub mod metrics;
pub mod models;
pub mod solver;
pub mod truncation;

pub use crate::core::{dist_up_to_phase, relative_error, CMatrix, CVector, RVector, Rng};
pub use error::{Error, Result};
