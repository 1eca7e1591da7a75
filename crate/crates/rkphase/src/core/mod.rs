//! Shared numeric primitives: complex array aliases, the phase-invariant
//! distance, power iteration, and the seeded RNG.

mod eig;
mod rng;

pub use eig::{leading_eigvec, EigOptions, EigResult};
pub use rng::{mix_seed, Rng};

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex vector with 64-bit float components.
pub type CVector = Array1<Complex64>;
/// Dense complex matrix; row `m` is the conjugate transpose of the m-th
/// sampling vector.
pub type CMatrix = Array2<Complex64>;
/// Dense real vector (measurements, weights, residuals).
pub type RVector = Array1<f64>;

/// `sum conj(x_i) * z_i`.
pub fn inner(x: &CVector, z: &CVector) -> Complex64 {
    x.iter().zip(z.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Euclidean norm.
pub fn norm(x: &CVector) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Distance between `x` and `z` minimized over a global phase on `x`:
/// `min_phi || x e^{i phi} - z ||`.
///
/// The optimal phase aligns `<x, z>` to the positive real axis; the distance
/// is then the explicit entrywise difference. (The algebraically equivalent
/// closed form `sqrt(||x||^2 + ||z||^2 - 2|<x,z>|)` loses half the mantissa
/// to cancellation near zero, which matters at recovery errors below 1e-8.)
pub fn dist_up_to_phase(x: &CVector, z: &CVector) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: z.len(),
        });
    }
    let c = inner(x, z);
    let phase = if c.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        c / c.norm()
    };
    let d = x
        .iter()
        .zip(z.iter())
        .map(|(a, b)| (a * phase - b).norm_sqr())
        .sum::<f64>();
    Ok(d.sqrt())
}

/// `dist_up_to_phase(x, z) / ||x||`; errors on zero ground truth.
pub fn relative_error(x: &CVector, z: &CVector) -> Result<f64> {
    let nx = norm(x);
    if nx == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(dist_up_to_phase(x, z)? / nx)
}
