//! Spectral initialization.
//!
//! The initial estimate is the leading eigenvector of the weighted scatter
//! matrix `D = sum_m h_m a_m a_m^*`, applied matrix-free as
//! `v -> A* (h .* (A v))`, scaled by a norm estimate of the signal. Two
//! weightings: the classical `h_m = y_m / M`, and the reverse-KL
//! minimum-distortion weights
//! `h_m = log((y_m / ||y||_1) / (||a_m||^2 / sum_i ||a_i||^2))`.

use num_complex::Complex64;

use crate::core::{leading_eigvec, CVector, EigOptions, RVector, Rng};
use crate::error::{invalid, Error, Result};
use crate::models::Operator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Classical,
    Rkld,
}

/// Per-measurement spectral weights.
#[derive(Debug, Clone)]
pub struct SpectralWeights {
    pub h: RVector,
    pub kind: WeightKind,
}

/// Classical scatter-matrix weights `h_m = y_m / M`.
pub fn classical_weights(y: &RVector) -> SpectralWeights {
    let m = y.len() as f64;
    SpectralWeights {
        h: y.mapv(|v| v / m),
        kind: WeightKind::Classical,
    }
}

/// Reverse-KL minimum-distortion weights.
///
/// Zero measurements are floored at `1e-12 * mean(y)` before the logarithm:
/// the weight stays finite while still strongly penalizing directions the
/// data marks as (near-)orthogonal to the signal.
pub fn rkld_weights(y: &RVector, op: &dyn Operator) -> Result<SpectralWeights> {
    if y.len() != op.rows() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: op.rows(),
        });
    }
    let y_sum = y.sum();
    if !(y_sum > 0.0) {
        return Err(invalid("rkld_weights: ||y||_1 must be positive"));
    }
    let rns = op.row_norms_sq();
    let rns_sum = rns.sum();
    let floor = 1e-12 * y_sum / y.len() as f64;
    let h = RVector::from_shape_fn(y.len(), |m| {
        let ym = y[m].max(floor);
        ((ym / y_sum) / (rns[m] / rns_sum)).ln()
    });
    Ok(SpectralWeights {
        h,
        kind: WeightKind::Rkld,
    })
}

/// Spectral estimate with convergence diagnostics.
#[derive(Debug, Clone)]
pub struct SpectralInit {
    /// Scaled leading eigenvector; defined up to a global phase.
    pub z0: CVector,
    /// Leading eigenvalue of the weighted scatter matrix.
    pub eigenvalue: f64,
    /// False when power iteration hit its budget before the residual bound.
    pub converged: bool,
}

/// Norm scale applied to the unit eigenvector:
/// `sqrt(N * sum(y) / sum ||a_m||^2)`, which estimates `||x||` under
/// unit-variance sampling rows.
pub fn default_norm_scale(op: &dyn Operator, y: &RVector) -> f64 {
    let rns_sum = op.row_norms_sq().sum();
    if rns_sum > 0.0 {
        (op.cols() as f64 * y.sum() / rns_sum).sqrt()
    } else {
        0.0
    }
}

/// Leading eigenvector of `D = sum_m h_m a_m a_m^*`, scaled.
///
/// RKLD weights can be negative, making `D` indefinite; plain power
/// iteration then tracks the largest-|lambda| eigenvalue rather than the
/// largest algebraic one. A second pass on `D + 1.05 |nu| I` (nu the phase-1
/// Rayleigh value) recovers the top of the spectrum in that case.
pub fn spectral_estimate(
    weights: &SpectralWeights,
    op: &dyn Operator,
    y: &RVector,
    opts: &EigOptions,
    scale_override: Option<f64>,
    rng: &mut Rng,
) -> Result<SpectralInit> {
    if weights.h.len() != op.rows() {
        return Err(Error::LengthMismatch {
            left: weights.h.len(),
            right: op.rows(),
        });
    }
    if weights.h.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateSpectral);
    }
    let h = &weights.h;
    let matvec = |v: &CVector| -> CVector {
        let mut u = op.apply(v);
        for (ui, &hi) in u.iter_mut().zip(h.iter()) {
            *ui *= hi;
        }
        op.adjoint_apply(&u)
    };

    let first = leading_eigvec(matvec, op.cols(), opts, rng)?;
    let (vector, eigenvalue, converged) = if first.value >= 0.0 {
        (first.vector, first.value, first.converged)
    } else {
        let shift = 1.05 * first.value.abs();
        let shifted = |v: &CVector| -> CVector {
            let mut w = matvec(v);
            for (wi, vi) in w.iter_mut().zip(v.iter()) {
                *wi += vi * Complex64::from(shift);
            }
            w
        };
        let second = leading_eigvec(shifted, op.cols(), opts, rng)?;
        (second.vector, second.value - shift, second.converged)
    };

    let scale = scale_override.unwrap_or_else(|| default_norm_scale(op, y));
    Ok(SpectralInit {
        z0: vector.mapv(|c| c * scale),
        eigenvalue,
        converged,
    })
}
