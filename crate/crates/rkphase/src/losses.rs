//! Loss values and Wirtinger gradients.
//!
//! Gradients follow the `df/d(conj z)` convention, so the descent update is
//! `z - mu * grad`. The reverse-KL loss is reported in divergence form
//! (nonnegative, zero exactly at `|Az|^2 = y`); its gradient carries no 1/M
//! factor, matching the plain sum it differentiates — the solver applies the
//! 1/M scaling behind a config flag. The baseline losses carry their
//! conventional 1/M normalization in both value and gradient, so every kind
//! is consistent with finite differences of its own value.

use num_complex::Complex64;

use crate::core::{CVector, RVector};
use crate::error::{invalid, Result};
use crate::models::Operator;

/// Loss families selectable in the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// Reverse-KL divergence between `|Az|^2 + lambda` and `y + lambda`.
    RkldRegularized { lambda: f64 },
    /// `(1/2M) sum (y - |Az|^2)^2`.
    IntensityL2,
    /// Poisson / forward-KL mismatch; `eps` is the denominator guard as a
    /// fraction of `mean(y)`.
    PoissonFkld { eps: f64 },
    /// `(1/2M) sum (|Az| - sqrt(y))^2`.
    ReshapedL2,
}

pub const DEFAULT_LAMBDA: f64 = 1e-8;
pub const DEFAULT_POISSON_EPS: f64 = 1e-12;

impl LossKind {
    pub fn rkld() -> Self {
        LossKind::RkldRegularized {
            lambda: DEFAULT_LAMBDA,
        }
    }

    pub fn poisson() -> Self {
        LossKind::PoissonFkld {
            eps: DEFAULT_POISSON_EPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LossKind::RkldRegularized { lambda } => {
                if !(lambda > 0.0 && lambda < 1.0) {
                    return Err(invalid("rkld: lambda must lie in (0, 1)"));
                }
            }
            LossKind::PoissonFkld { eps } => {
                if !(eps > 0.0) {
                    return Err(invalid("poisson: eps must be positive"));
                }
            }
            LossKind::IntensityL2 | LossKind::ReshapedL2 => {}
        }
        Ok(())
    }

    /// Whether the gradient formula already includes the 1/M factor.
    pub fn grad_is_m_normalized(&self) -> bool {
        !matches!(self, LossKind::RkldRegularized { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::RkldRegularized { .. } => "rkld",
            LossKind::IntensityL2 => "intensity-l2",
            LossKind::PoissonFkld { .. } => "poisson-fkld",
            LossKind::ReshapedL2 => "reshaped-l2",
        }
    }
}

/// Value and gradient at a point.
#[derive(Debug, Clone)]
pub struct LossEval {
    pub value: f64,
    pub grad: CVector,
}

fn poisson_guard(eps: f64, y: &RVector) -> f64 {
    let mean = if y.is_empty() {
        0.0
    } else {
        y.sum() / y.len() as f64
    };
    if mean > 0.0 {
        eps * mean
    } else {
        eps
    }
}

/// Loss value as a function of synthesized intensities `q = |Az|^2` and
/// measurements `y`; used wherever `Az` is already available.
pub fn value_from_intensities(kind: &LossKind, q: &RVector, y: &RVector) -> Result<f64> {
    kind.validate()?;
    if q.len() != y.len() {
        return Err(crate::error::Error::LengthMismatch {
            left: q.len(),
            right: y.len(),
        });
    }
    let m = y.len() as f64;
    let value = match *kind {
        LossKind::RkldRegularized { lambda } => q
            .iter()
            .zip(y.iter())
            .map(|(&qm, &ym)| {
                let a = qm + lambda;
                let b = ym + lambda;
                a * (a.ln() - b.ln()) - a + b
            })
            .sum(),
        LossKind::IntensityL2 => {
            q.iter()
                .zip(y.iter())
                .map(|(&qm, &ym)| (ym - qm) * (ym - qm))
                .sum::<f64>()
                / (2.0 * m)
        }
        LossKind::PoissonFkld { eps } => {
            let guard = poisson_guard(eps, y);
            q.iter()
                .zip(y.iter())
                .map(|(&qm, &ym)| {
                    let t = if ym > 0.0 {
                        ym * (ym.ln() - (qm + guard).ln())
                    } else {
                        0.0
                    };
                    t - (ym - qm)
                })
                .sum::<f64>()
                / m
        }
        LossKind::ReshapedL2 => {
            q.iter()
                .zip(y.iter())
                .map(|(&qm, &ym)| {
                    let d = qm.sqrt() - ym.sqrt();
                    d * d
                })
                .sum::<f64>()
                / (2.0 * m)
        }
    };
    Ok(value)
}

/// Per-measurement gradient weights `w` such that `grad = A* w`, given
/// `az = Az`. Rows with `az = 0` and `y = 0` contribute exactly zero for
/// every kind, which is what makes zero-weighted masking equal row deletion.
pub fn gradient_weights(kind: &LossKind, az: &CVector, y: &RVector) -> Result<CVector> {
    kind.validate()?;
    if az.len() != y.len() {
        return Err(crate::error::Error::LengthMismatch {
            left: az.len(),
            right: y.len(),
        });
    }
    let m = y.len() as f64;
    let w = match *kind {
        LossKind::RkldRegularized { lambda } => az
            .iter()
            .zip(y.iter())
            .map(|(&azm, &ym)| {
                let q = azm.norm_sqr();
                azm * ((q + lambda).ln() - (ym + lambda).ln())
            })
            .collect(),
        LossKind::IntensityL2 => az
            .iter()
            .zip(y.iter())
            .map(|(&azm, &ym)| {
                let q = azm.norm_sqr();
                azm * ((q - ym) / m)
            })
            .collect(),
        LossKind::PoissonFkld { eps } => {
            let guard = poisson_guard(eps, y);
            az.iter()
                .zip(y.iter())
                .map(|(&azm, &ym)| {
                    let q = azm.norm_sqr();
                    azm * ((1.0 - ym / (q + guard)) / m)
                })
                .collect()
        }
        // d sqrt(q) / d conj(z) = a (a* z) / (2 sqrt(q)), so the amplitude
        // loss picks up a 1/2 the plain-square losses do not have.
        LossKind::ReshapedL2 => az
            .iter()
            .zip(y.iter())
            .map(|(&azm, &ym)| {
                let r = azm.norm();
                if r > 0.0 {
                    (azm / r) * ((r - ym.sqrt()) / (2.0 * m))
                } else {
                    // 0/0 phase convention: a zero row contributes nothing.
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect(),
    };
    Ok(w)
}

/// Regularized reverse-KL divergence value at `z`.
pub fn rkld_value(z: &CVector, op: &dyn Operator, y: &RVector, lambda: f64) -> Result<f64> {
    let kind = LossKind::RkldRegularized { lambda };
    let q = crate::models::forward_intensity(op, z)?;
    value_from_intensities(&kind, &q, y)
}

/// Wirtinger gradient of the regularized reverse-KL loss at `z`
/// (unscaled; see module docs).
pub fn rkld_grad(z: &CVector, op: &dyn Operator, y: &RVector, lambda: f64) -> Result<CVector> {
    let kind = LossKind::RkldRegularized { lambda };
    let az = op.apply(z);
    let w = gradient_weights(&kind, &az, y)?;
    Ok(op.adjoint_apply(&w))
}

/// Value and gradient for any loss kind.
pub fn eval(kind: &LossKind, z: &CVector, op: &dyn Operator, y: &RVector) -> Result<LossEval> {
    if z.len() != op.cols() {
        return Err(crate::error::Error::LengthMismatch {
            left: z.len(),
            right: op.cols(),
        });
    }
    let az = op.apply(z);
    let q = az.mapv(|c| c.norm_sqr());
    let value = value_from_intensities(kind, &q, y)?;
    let w = gradient_weights(kind, &az, y)?;
    Ok(LossEval {
        value,
        grad: op.adjoint_apply(&w),
    })
}

/// Value and gradient for the baseline (non-RKLD) losses.
pub fn baseline_eval(
    kind: &LossKind,
    z: &CVector,
    op: &dyn Operator,
    y: &RVector,
) -> Result<LossEval> {
    if matches!(kind, LossKind::RkldRegularized { .. }) {
        return Err(invalid("baseline_eval: use rkld_value / rkld_grad"));
    }
    eval(kind, z, op, y)
}
