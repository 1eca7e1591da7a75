//! Power iteration for the dominant eigenpair of a Hermitian operator.

use num_complex::Complex64;

use super::{norm, CVector, Rng};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            max_iters: 2000,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigResult {
    /// Unit eigenvector estimate; defined only up to a global phase.
    pub vector: CVector,
    /// Rayleigh quotient at the returned vector (real for Hermitian input).
    pub value: f64,
    /// Whether the residual criterion `||Mv - lambda v|| <= tol * |lambda|`
    /// was met within the iteration budget.
    pub converged: bool,
    pub iterations: usize,
}

/// Dominant (largest-|lambda|) eigenpair of the Hermitian operator given by
/// `matvec`, via power iteration from a random unit start.
///
/// Non-convergence is not an error: the best iterate is returned with
/// `converged = false`.
pub fn leading_eigvec<F>(matvec: F, n: usize, opts: &EigOptions, rng: &mut Rng) -> Result<EigResult>
where
    F: Fn(&CVector) -> CVector,
{
    if n == 0 {
        return Err(invalid("leading_eigvec: zero dimension"));
    }
    if opts.tol <= 0.0 {
        return Err(invalid("leading_eigvec: tol must be positive"));
    }
    let mut v: CVector = (0..n).map(|_| rng.complex_standard_normal()).collect();
    let nv = norm(&v);
    v.mapv_inplace(|c| c / nv);

    let mut value = 0.0;
    for it in 0..opts.max_iters {
        let w = matvec(&v);
        debug_assert_eq!(w.len(), n);
        // Rayleigh quotient; Hermitian operators make this real.
        value = super::inner(&v, &w).re;
        let residual = {
            let mut r = 0.0;
            for (wi, vi) in w.iter().zip(v.iter()) {
                r += (wi - vi * Complex64::from(value)).norm_sqr();
            }
            r.sqrt()
        };
        if residual <= opts.tol * value.abs() {
            let nw = norm(&w);
            if nw > 0.0 {
                return Ok(EigResult {
                    vector: w.mapv(|c| c / nw),
                    value,
                    converged: true,
                    iterations: it + 1,
                });
            }
            // Zero operator: any unit vector is an eigenvector for 0.
            return Ok(EigResult {
                vector: v,
                value: 0.0,
                converged: true,
                iterations: it + 1,
            });
        }
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok(EigResult {
                vector: v,
                value: 0.0,
                converged: true,
                iterations: it + 1,
            });
        }
        v = w.mapv(|c| c / nw);
    }
    Ok(EigResult {
        vector: v,
        value,
        converged: false,
        iterations: opts.max_iters,
    })
}
