//! Noise and sparse-outlier injection.

use crate::core::{RVector, Rng};
use crate::error::{invalid, Result};

/// Corruption levels, all relative to `||x||^2`: noise entries are
/// U(0, sigma ||x||^2), outlier magnitudes U(0, theta ||x||^2) on a
/// uniformly chosen support of floor(rho M) indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionSpec {
    pub sigma: f64,
    pub theta: f64,
    pub rho: f64,
    /// When set, each outlier is negated with probability 1/2.
    pub signed_outliers: bool,
}

impl CorruptionSpec {
    pub fn clean() -> Self {
        CorruptionSpec {
            sigma: 0.0,
            theta: 0.0,
            rho: 0.0,
            signed_outliers: false,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.sigma == 0.0 && (self.theta == 0.0 || self.rho == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) {
            return Err(invalid("corruption: sigma must be >= 0"));
        }
        if !(self.theta >= 0.0) {
            return Err(invalid("corruption: theta must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(invalid("corruption: rho must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Corrupted measurements plus the injected components for diagnostics.
#[derive(Debug, Clone)]
pub struct Corruption {
    /// `max(y_clean + outliers + noise, 0)` elementwise.
    pub y: RVector,
    /// Outlier support indices (in draw order).
    pub support: Vec<usize>,
    /// Dense noise vector `w`.
    pub noise: RVector,
    /// Sparse outlier vector `eta`.
    pub outliers: RVector,
}

/// Inject uniform noise and sparse outliers into clean intensities.
///
/// Negative post-injection intensities (possible only with signed outliers)
/// are clamped to zero; downstream logarithms require `y >= 0`.
pub fn corrupt(
    y_clean: &RVector,
    x_norm_sq: f64,
    spec: &CorruptionSpec,
    rng: &mut Rng,
) -> Result<Corruption> {
    spec.validate()?;
    let m = y_clean.len();
    if m == 0 {
        return Err(crate::error::Error::EmptyInput("corrupt: y_clean"));
    }
    if (spec.sigma > 0.0 || (spec.theta > 0.0 && spec.rho > 0.0)) && !(x_norm_sq > 0.0) {
        return Err(invalid(
            "corrupt: x_norm_sq must be positive when injecting",
        ));
    }

    let mut noise = RVector::zeros(m);
    if spec.sigma > 0.0 {
        let hi = spec.sigma * x_norm_sq;
        for v in noise.iter_mut() {
            *v = rng.uniform(0.0, hi);
        }
    }

    let mut outliers = RVector::zeros(m);
    let count = (spec.rho * m as f64).floor() as usize;
    let mut support = Vec::new();
    if spec.theta > 0.0 && count > 0 {
        support = rng.sample_indices(m, count);
        let hi = spec.theta * x_norm_sq;
        for &idx in &support {
            let mut v = rng.uniform(0.0, hi);
            if spec.signed_outliers && rng.coin() {
                v = -v;
            }
            outliers[idx] = v;
        }
    }

    let y = RVector::from_shape_fn(m, |i| (y_clean[i] + outliers[i] + noise[i]).max(0.0));
    Ok(Corruption {
        y,
        support,
        noise,
        outliers,
    })
}
