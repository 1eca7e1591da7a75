//! Per-iteration measurement masks that suppress contaminated samples.
//!
//! Three schemes: mean-residual (keep `|y - q| <= gamma_e * mean`),
//! median-residual with an anisotropy factor (keep rows with bounded
//! `|a_m^* z| / ||z||` whose residual is within `gamma_e * median * factor`),
//! and a one-sided threshold on the residual of logarithms
//! `log(y) - log(q)` (rows with `y = 0` are always preserved: they carry
//! orthogonality information, not contamination).

use crate::core::{norm, CVector, RVector};
use crate::error::{invalid, Result};
use crate::models::Operator;

/// Truncation scheme selector with thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationKind {
    None,
    MeanResidual { gamma_e: f64 },
    MedianResidual { gamma_ub: f64, gamma_e: f64 },
    OneSidedLog { gamma_h: f64 },
}

pub const DEFAULT_GAMMA_E: f64 = 3.0;
pub const DEFAULT_GAMMA_UB: f64 = 5.0;
pub const DEFAULT_GAMMA_H: f64 = 3.0;

impl TruncationKind {
    pub fn mean() -> Self {
        TruncationKind::MeanResidual {
            gamma_e: DEFAULT_GAMMA_E,
        }
    }

    pub fn median() -> Self {
        TruncationKind::MedianResidual {
            gamma_ub: DEFAULT_GAMMA_UB,
            gamma_e: DEFAULT_GAMMA_E,
        }
    }

    pub fn one_sided_log() -> Self {
        TruncationKind::OneSidedLog {
            gamma_h: DEFAULT_GAMMA_H,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            TruncationKind::None => true,
            TruncationKind::MeanResidual { gamma_e } => gamma_e > 0.0,
            TruncationKind::MedianResidual { gamma_ub, gamma_e } => gamma_ub > 0.0 && gamma_e > 0.0,
            TruncationKind::OneSidedLog { gamma_h } => gamma_h > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("truncation thresholds must be positive"))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TruncationKind::None => "none",
            TruncationKind::MeanResidual { .. } => "mean-residual",
            TruncationKind::MedianResidual { .. } => "median-residual",
            TruncationKind::OneSidedLog { .. } => "one-sided-log",
        }
    }
}

/// Boolean keep/drop vector over measurements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    kept: Vec<bool>,
    kept_count: usize,
}

impl Mask {
    pub fn all_true(m: usize) -> Self {
        Mask {
            kept: vec![true; m],
            kept_count: m,
        }
    }

    fn from_kept(kept: Vec<bool>) -> Self {
        let kept_count = kept.iter().filter(|&&b| b).count();
        Mask { kept, kept_count }
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn kept_count(&self) -> usize {
        self.kept_count
    }

    pub fn is_kept(&self, m: usize) -> bool {
        self.kept[m]
    }

    pub fn kept_indices(&self) -> Vec<usize> {
        self.kept
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

/// Median with the midpoint-of-two convention for even lengths.
/// Opposite-infinity central pairs (possible for residuals of logarithms)
/// midpoint to 0 rather than NaN.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let a = v[n / 2 - 1];
        let b = v[n / 2];
        if a.is_infinite() && b.is_infinite() && a != b {
            0.0
        } else {
            (a + b) / 2.0
        }
    }
}

/// If `kept` is empty, keep the ceil(M/2) indices with the smallest scheme
/// statistic so the gradient never silently vanishes.
fn min_keep_fallback(kept: Vec<bool>, score: &[f64]) -> Mask {
    if kept.iter().any(|&b| b) {
        return Mask::from_kept(kept);
    }
    let m = kept.len();
    let keep = m.div_ceil(2);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| f64::total_cmp(&score[a], &score[b]));
    let mut out = vec![false; m];
    for &i in order.iter().take(keep) {
        out[i] = true;
    }
    Mask::from_kept(out)
}

fn residuals(op: &dyn Operator, y: &RVector, z: &CVector) -> Result<(CVector, RVector)> {
    if y.len() != op.rows() {
        return Err(crate::error::Error::LengthMismatch {
            left: y.len(),
            right: op.rows(),
        });
    }
    if z.len() != op.cols() {
        return Err(crate::error::Error::LengthMismatch {
            left: z.len(),
            right: op.cols(),
        });
    }
    let az = op.apply(z);
    let r = RVector::from_shape_fn(y.len(), |m| (y[m] - az[m].norm_sqr()).abs());
    Ok((az, r))
}

/// Keep `m` iff `|y_m - q_m| <= gamma_e * mean(|y - q|)`.
pub fn mean_residual_mask(
    z: &CVector,
    op: &dyn Operator,
    y: &RVector,
    gamma_e: f64,
) -> Result<Mask> {
    if !(gamma_e > 0.0) {
        return Err(invalid("mean_residual_mask: gamma_e must be positive"));
    }
    let (_, r) = residuals(op, y, z)?;
    let bound = gamma_e * r.mean().unwrap_or(0.0);
    let kept = r.iter().map(|&rm| rm <= bound).collect();
    Ok(min_keep_fallback(kept, r.as_slice().unwrap()))
}

/// Keep `m` iff `|a_m^* z| / ||z|| <= gamma_ub` and
/// `|y_m - q_m| <= gamma_e * median(|y - q|) * |a_m^* z| / ||z||`.
pub fn median_residual_mask(
    z: &CVector,
    op: &dyn Operator,
    y: &RVector,
    gamma_ub: f64,
    gamma_e: f64,
) -> Result<Mask> {
    if !(gamma_ub > 0.0 && gamma_e > 0.0) {
        return Err(invalid("median_residual_mask: thresholds must be positive"));
    }
    let zn = norm(z);
    if !(zn > 0.0) {
        return Err(invalid("median_residual_mask: z must be nonzero"));
    }
    let (az, r) = residuals(op, y, z)?;
    let med = median(r.as_slice().unwrap());
    let kept = (0..y.len())
        .map(|m| {
            let aniso = az[m].norm() / zn;
            aniso <= gamma_ub && r[m] <= gamma_e * med * aniso
        })
        .collect();
    Ok(min_keep_fallback(kept, r.as_slice().unwrap()))
}

/// One-sided truncation on the residual of logarithms
/// `r_m = log(y_m) - log(q_m)`: keep `m` iff `r_m <= gamma_h * median(r)`.
/// `y_m = 0` gives `r_m = -inf` and is always kept; `q_m = 0 < y_m` gives
/// `+inf` and is always dropped.
pub fn one_sided_log_mask(
    z: &CVector,
    op: &dyn Operator,
    y: &RVector,
    gamma_h: f64,
) -> Result<Mask> {
    if !(gamma_h > 0.0) {
        return Err(invalid("one_sided_log_mask: gamma_h must be positive"));
    }
    let (az, _) = residuals(op, y, z)?;
    let r = RVector::from_shape_fn(y.len(), |m| {
        let q = az[m].norm_sqr();
        match (y[m] > 0.0, q > 0.0) {
            (false, _) => f64::NEG_INFINITY,
            (true, false) => f64::INFINITY,
            (true, true) => y[m].ln() - q.ln(),
        }
    });
    let d = median(r.as_slice().unwrap());
    // gamma_h * d is used verbatim even when d < 0.
    let bound = gamma_h * d;
    let kept = (0..y.len()).map(|m| y[m] == 0.0 || r[m] <= bound).collect();
    Ok(min_keep_fallback(kept, r.as_slice().unwrap()))
}

/// Mask for a configured scheme; `None` kind yields no mask.
pub fn build_mask(
    kind: &TruncationKind,
    z: &CVector,
    op: &dyn Operator,
    y: &RVector,
) -> Result<Option<Mask>> {
    match *kind {
        TruncationKind::None => Ok(None),
        TruncationKind::MeanResidual { gamma_e } => mean_residual_mask(z, op, y, gamma_e).map(Some),
        TruncationKind::MedianResidual { gamma_ub, gamma_e } => {
            median_residual_mask(z, op, y, gamma_ub, gamma_e).map(Some)
        }
        TruncationKind::OneSidedLog { gamma_h } => one_sided_log_mask(z, op, y, gamma_h).map(Some),
    }
}

/// Operator view with dropped rows zero-weighted: `apply` zeroes masked
/// entries of `Az`, `adjoint_apply` ignores masked entries of its input.
/// Combined with the zeroed measurement vector from [`apply_mask`], every
/// loss formula contributes exactly zero on dropped rows, which coincides
/// with physical row deletion.
pub struct MaskedOperator<'a> {
    op: &'a dyn Operator,
    mask: &'a Mask,
}

impl<'a> Operator for MaskedOperator<'a> {
    fn rows(&self) -> usize {
        self.op.rows()
    }

    fn cols(&self) -> usize {
        self.op.cols()
    }

    fn apply(&self, z: &CVector) -> CVector {
        let mut u = self.op.apply(z);
        for (m, v) in u.iter_mut().enumerate() {
            if !self.mask.is_kept(m) {
                *v = num_complex::Complex64::new(0.0, 0.0);
            }
        }
        u
    }

    fn adjoint_apply(&self, u: &CVector) -> CVector {
        let mut masked = u.clone();
        for (m, v) in masked.iter_mut().enumerate() {
            if !self.mask.is_kept(m) {
                *v = num_complex::Complex64::new(0.0, 0.0);
            }
        }
        self.op.adjoint_apply(&masked)
    }

    fn row_norms_sq(&self) -> RVector {
        let mut r = self.op.row_norms_sq();
        for (m, v) in r.iter_mut().enumerate() {
            if !self.mask.is_kept(m) {
                *v = 0.0;
            }
        }
        r
    }
}

/// Zero-weighted view of `(op, y)` under `mask`.
pub fn apply_mask<'a>(
    op: &'a dyn Operator,
    y: &RVector,
    mask: &'a Mask,
) -> Result<(MaskedOperator<'a>, RVector)> {
    if mask.len() != op.rows() {
        return Err(crate::error::Error::LengthMismatch {
            left: mask.len(),
            right: op.rows(),
        });
    }
    if mask.kept_count() == 0 {
        return Err(invalid("apply_mask: mask keeps no rows"));
    }
    let ym = RVector::from_shape_fn(y.len(), |m| if mask.is_kept(m) { y[m] } else { 0.0 });
    Ok((MaskedOperator { op, mask }, ym))
}
