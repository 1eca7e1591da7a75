//! Evaluation metrics over Monte-Carlo trials: average relative error,
//! empirical success probability, SNR, and correlation coefficients.

use crate::core::{inner, norm, CVector, RVector};
use crate::error::{invalid, Error, Result};

/// Success threshold on the phase-aligned distance: a trial succeeds when
/// `dist(x, z) < 1e-5` (strictly).
pub const SUCCESS_DIST_THRESHOLD: f64 = 1e-5;

/// Outcome of a single Monte-Carlo trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    /// Swept parameter value for the trial (oversampling factor, pattern
    /// count, corruption level, ...).
    pub sweep_value: f64,
    pub algorithm: String,
    pub trial: usize,
    pub rel_err: f64,
    pub dist: f64,
    pub iterations: usize,
    pub success: bool,
    pub wall_ms: f64,
}

/// Mean relative error over trials.
pub fn are(records: &[TrialRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("are: no records"));
    }
    Ok(records.iter().map(|r| r.rel_err).sum::<f64>() / records.len() as f64)
}

/// Fraction of trials with `dist < threshold` (strict inequality; a trial at
/// exactly the threshold counts as a failure).
pub fn success_probability(records: &[TrialRecord], threshold: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("success_probability: no records"));
    }
    let hits = records.iter().filter(|r| r.dist < threshold).count();
    Ok(hits as f64 / records.len() as f64)
}

fn population_variance(v: &RVector) -> f64 {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    v.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// `20 log10 sqrt(var(y_clean) / var(w))` with population variances.
pub fn snr_db(y_clean: &RVector, w: &RVector) -> Result<f64> {
    if y_clean.is_empty() || w.is_empty() {
        return Err(Error::EmptyInput("snr_db"));
    }
    let vw = population_variance(w);
    if !(vw > 0.0) {
        return Err(invalid("snr_db: noise variance must be positive"));
    }
    let vy = population_variance(y_clean);
    Ok(20.0 * (vy / vw).sqrt().log10())
}

/// Mean over trials of `|<x, z_hat>| / ||x||` with each reconstruction
/// normalized to unit norm first; bounded in [0, 1] and phase invariant.
pub fn acc(x: &CVector, reconstructions: &[CVector]) -> Result<f64> {
    if reconstructions.is_empty() {
        return Err(Error::EmptyInput("acc: no reconstructions"));
    }
    let nx = norm(x);
    if !(nx > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let mut total = 0.0;
    for z in reconstructions {
        if z.len() != x.len() {
            return Err(Error::LengthMismatch {
                left: z.len(),
                right: x.len(),
            });
        }
        let nz = norm(z);
        if !(nz > 0.0) {
            return Err(Error::ZeroNorm);
        }
        total += inner(x, z).norm() / (nz * nx);
    }
    Ok(total / reconstructions.len() as f64)
}

/// Mean of per-image correlation coefficients.
pub fn acc_over_images(per_image: &[f64]) -> Result<f64> {
    if per_image.is_empty() {
        return Err(Error::EmptyInput("acc_over_images"));
    }
    Ok(per_image.iter().sum::<f64>() / per_image.len() as f64)
}
