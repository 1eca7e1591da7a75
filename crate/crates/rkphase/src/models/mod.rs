//! Measurement operators and the forward intensity model.
//!
//! Two operator families: dense complex Gaussian matrices, and coded
//! diffraction patterns (per-pattern modulation followed by an unnormalized
//! DFT, stacked over patterns so `M = L * N`).

mod corrupt;
mod surface;

pub use corrupt::{corrupt, Corruption, CorruptionSpec};
pub use surface::{loss_surface_grid, GridSpec};

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::core::{CMatrix, CVector, RVector, Rng};
use crate::error::{Error, Result};

/// Linear sampling operator interface: `apply` is `z -> Az`, `adjoint_apply`
/// is `u -> A* u`. Implementations must form an adjoint pair.
pub trait Operator {
    /// Number of measurements M.
    fn rows(&self) -> usize;
    /// Signal dimension N.
    fn cols(&self) -> usize;
    fn apply(&self, z: &CVector) -> CVector;
    fn adjoint_apply(&self, u: &CVector) -> CVector;
    /// `||a_m||^2` per row.
    fn row_norms_sq(&self) -> RVector;
}

/// Coded-diffraction operator: `L` modulation patterns of length `N`;
/// measurement `(l, k)` is the k-th unnormalized DFT coefficient of
/// `z` modulated by pattern `l`. Rows are indexed `m = l * N + k`.
#[derive(Clone)]
pub struct CdpOperator {
    /// `L x N` pattern matrix.
    patterns: CMatrix,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl CdpOperator {
    pub fn new(patterns: CMatrix) -> Self {
        let n = patterns.ncols();
        let mut planner = FftPlanner::new();
        CdpOperator {
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            patterns,
        }
    }

    pub fn num_patterns(&self) -> usize {
        self.patterns.nrows()
    }

    pub fn patterns(&self) -> &CMatrix {
        &self.patterns
    }

    /// Materialize the dense equivalent (rows = DFT of the diagonal
    /// pattern); intended for small-N oracle checks.
    pub fn to_dense(&self) -> CMatrix {
        let (l_count, n) = (self.patterns.nrows(), self.patterns.ncols());
        let mut a = CMatrix::zeros((l_count * n, n));
        for l in 0..l_count {
            for k in 0..n {
                for j in 0..n {
                    let w = -2.0 * std::f64::consts::PI * (k as f64) * (j as f64) / (n as f64);
                    a[[l * n + k, j]] = self.patterns[[l, j]] * Complex64::from_polar(1.0, w);
                }
            }
        }
        a
    }
}

impl fmt::Debug for CdpOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CdpOperator")
            .field("patterns", &self.patterns.dim())
            .finish()
    }
}

/// Either a dense sampling matrix or a structured CDP operator.
#[derive(Debug, Clone)]
pub enum MeasurementOperator {
    Dense(CMatrix),
    Cdp(CdpOperator),
}

impl MeasurementOperator {
    pub fn dense(a: CMatrix) -> Self {
        MeasurementOperator::Dense(a)
    }

    pub fn cdp(patterns: CMatrix) -> Self {
        MeasurementOperator::Cdp(CdpOperator::new(patterns))
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }
}

impl Operator for MeasurementOperator {
    fn rows(&self) -> usize {
        match self {
            MeasurementOperator::Dense(a) => a.nrows(),
            MeasurementOperator::Cdp(c) => c.patterns.nrows() * c.patterns.ncols(),
        }
    }

    fn cols(&self) -> usize {
        match self {
            MeasurementOperator::Dense(a) => a.ncols(),
            MeasurementOperator::Cdp(c) => c.patterns.ncols(),
        }
    }

    fn apply(&self, z: &CVector) -> CVector {
        assert_eq!(z.len(), self.cols(), "apply: dimension mismatch");
        match self {
            MeasurementOperator::Dense(a) => a.dot(z),
            MeasurementOperator::Cdp(c) => {
                let (l_count, n) = c.patterns.dim();
                let mut out = CVector::zeros(l_count * n);
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                for l in 0..l_count {
                    for j in 0..n {
                        buf[j] = c.patterns[[l, j]] * z[j];
                    }
                    c.fft.process(&mut buf);
                    for k in 0..n {
                        out[l * n + k] = buf[k];
                    }
                }
                out
            }
        }
    }

    fn adjoint_apply(&self, u: &CVector) -> CVector {
        assert_eq!(u.len(), self.rows(), "adjoint_apply: dimension mismatch");
        match self {
            MeasurementOperator::Dense(a) => {
                let mut out = CVector::zeros(a.ncols());
                for (m, row) in a.rows().into_iter().enumerate() {
                    let um = u[m];
                    for (o, am) in out.iter_mut().zip(row.iter()) {
                        *o += am.conj() * um;
                    }
                }
                out
            }
            MeasurementOperator::Cdp(c) => {
                // A* u = sum_l conj(d_l) .* F* u_l, with F* the unnormalized
                // inverse-direction transform (rustfft's inverse, unscaled).
                let (l_count, n) = c.patterns.dim();
                let mut out = CVector::zeros(n);
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                for l in 0..l_count {
                    buf.copy_from_slice(&u.as_slice().unwrap()[l * n..(l + 1) * n]);
                    c.ifft.process(&mut buf);
                    for j in 0..n {
                        out[j] += c.patterns[[l, j]].conj() * buf[j];
                    }
                }
                out
            }
        }
    }

    fn row_norms_sq(&self) -> RVector {
        match self {
            MeasurementOperator::Dense(a) => a
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|c| c.norm_sqr()).sum())
                .collect(),
            MeasurementOperator::Cdp(c) => {
                let (l_count, n) = c.patterns.dim();
                let mut out = RVector::zeros(l_count * n);
                for l in 0..l_count {
                    let pn: f64 = c.patterns.row(l).iter().map(|d| d.norm_sqr()).sum();
                    for k in 0..n {
                        out[l * n + k] = pn;
                    }
                }
                out
            }
        }
    }
}

/// Dense `M x N` matrix with i.i.d. unit-variance complex Gaussian entries
/// (real and imaginary parts each N(0, 1/2)).
pub fn sample_gaussian(m: usize, n: usize, rng: &mut Rng) -> Result<MeasurementOperator> {
    if m == 0 || n == 0 {
        return Err(crate::error::invalid("sample_gaussian: M, N must be >= 1"));
    }
    let a = CMatrix::from_shape_fn((m, n), |_| rng.complex_unit_variance());
    Ok(MeasurementOperator::Dense(a))
}

/// One octanary draw: `b1 * b2` with `b1` uniform on {1, -1, i, -i} and
/// `b2 = sqrt(2)/2` with probability 4/5, `sqrt(3)` with probability 1/5.
fn octanary(rng: &mut Rng) -> Complex64 {
    let b1 = match (rng.coin(), rng.coin()) {
        (false, false) => Complex64::new(1.0, 0.0),
        (false, true) => Complex64::new(-1.0, 0.0),
        (true, false) => Complex64::new(0.0, 1.0),
        (true, true) => Complex64::new(0.0, -1.0),
    };
    let b2 = if rng.uniform(0.0, 1.0) < 0.8 {
        std::f64::consts::SQRT_2 / 2.0
    } else {
        3.0_f64.sqrt()
    };
    b1 * b2
}

/// CDP operator with `l_patterns` i.i.d. octanary patterns of length `n`;
/// yields `M = l_patterns * n` measurements.
pub fn sample_cdp(n: usize, l_patterns: usize, rng: &mut Rng) -> Result<MeasurementOperator> {
    if n == 0 || l_patterns == 0 {
        return Err(crate::error::invalid("sample_cdp: N, L must be >= 1"));
    }
    let patterns = CMatrix::from_shape_fn((l_patterns, n), |_| octanary(rng));
    Ok(MeasurementOperator::cdp(patterns))
}

/// Elementwise `|Az|^2`.
pub fn forward_intensity(op: &dyn Operator, z: &CVector) -> Result<RVector> {
    if z.len() != op.cols() {
        return Err(Error::LengthMismatch {
            left: z.len(),
            right: op.cols(),
        });
    }
    Ok(op.apply(z).mapv(|c| c.norm_sqr()))
}

/// Which sampling model generated an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gaussian,
    Cdp,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Gaussian => write!(f, "gaussian"),
            ModelKind::Cdp => write!(f, "cdp"),
        }
    }
}

/// Generation metadata carried alongside an instance.
#[derive(Debug, Clone)]
pub struct InstanceMeta {
    pub model: ModelKind,
    pub corruption: CorruptionSpec,
    pub seed: u64,
}

/// A measurement operator with its (possibly corrupted) intensities and
/// optional ground truth.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub op: MeasurementOperator,
    pub y: RVector,
    pub x_true: Option<CVector>,
    pub meta: InstanceMeta,
}

impl ProblemInstance {
    pub fn validate(&self) -> Result<()> {
        if self.y.len() != self.op.rows() {
            return Err(Error::LengthMismatch {
                left: self.y.len(),
                right: self.op.rows(),
            });
        }
        if let Some(x) = &self.x_true {
            if x.len() != self.op.cols() {
                return Err(Error::LengthMismatch {
                    left: x.len(),
                    right: self.op.cols(),
                });
            }
        }
        if self.y.iter().any(|&v| !(v >= 0.0)) {
            return Err(crate::error::invalid("ProblemInstance: y must be >= 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::inner;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use num_complex::Complex64 as C;

    fn rand_cvec(n: usize, rng: &mut Rng) -> CVector {
        (0..n).map(|_| rng.complex_standard_normal()).collect()
    }

    #[test]
    fn gaussian_shape_and_determinism() {
        let mut r1 = Rng::seed_from_u64(7);
        let mut r2 = Rng::seed_from_u64(7);
        let a = sample_gaussian(3, 2, &mut r1).unwrap();
        let b = sample_gaussian(3, 2, &mut r2).unwrap();
        assert_eq!(a.dims(), (3, 2));
        match (&a, &b) {
            (MeasurementOperator::Dense(ma), MeasurementOperator::Dense(mb)) => {
                assert_eq!(ma, mb);
            }
            _ => panic!("expected dense"),
        }
    }

    #[test]
    fn gaussian_row_norm_statistics() {
        let mut rng = Rng::seed_from_u64(11);
        let (m, n) = (2000, 100);
        let op = sample_gaussian(m, n, &mut rng).unwrap();
        let mean_rn = op.row_norms_sq().mean().unwrap();
        // E ||a_m||^2 = N under the unit-variance convention.
        assert!((mean_rn - n as f64).abs() < 0.05 * n as f64);
    }

    #[test]
    fn gaussian_entry_mean_near_zero() {
        let mut rng = Rng::seed_from_u64(13);
        let op = sample_gaussian(2000, 100, &mut rng).unwrap();
        if let MeasurementOperator::Dense(a) = &op {
            let total = a.len() as f64;
            let s: C = a.iter().sum();
            assert!(s.re.abs() / total < 0.05);
            assert!(s.im.abs() / total < 0.05);
        } else {
            panic!("expected dense");
        }
    }

    #[test]
    fn cdp_dims_and_impulse() {
        let mut rng = Rng::seed_from_u64(17);
        let (n, l) = (16, 4);
        let op = sample_cdp(n, l, &mut rng).unwrap();
        assert_eq!(op.dims(), (l * n, n));

        // Unit impulse at index 0: DFT is flat, intensity per pattern is
        // |d_l[0]|^2 for every frequency bin.
        let mut z = CVector::zeros(n);
        z[0] = C::new(1.0, 0.0);
        let y = forward_intensity(&op, &z).unwrap();
        if let MeasurementOperator::Cdp(c) = &op {
            for li in 0..l {
                let expect = c.patterns()[[li, 0]].norm_sqr();
                for k in 0..n {
                    assert_abs_diff_eq!(y[li * n + k], expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn cdp_parseval_per_pattern() {
        let mut rng = Rng::seed_from_u64(19);
        let (n, l) = (8, 3);
        let op = sample_cdp(n, l, &mut rng).unwrap();
        let x = rand_cvec(n, &mut rng);
        let y = forward_intensity(&op, &x).unwrap();
        if let MeasurementOperator::Cdp(c) = &op {
            for li in 0..l {
                let lhs: f64 = (0..n).map(|k| y[li * n + k]).sum();
                let rhs: f64 = (0..n)
                    .map(|j| (x[j] * c.patterns()[[li, j]]).norm_sqr())
                    .sum::<f64>()
                    * n as f64;
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9 * rhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn cdp_matches_dense_materialization() {
        let mut rng = Rng::seed_from_u64(23);
        let (n, l) = (32, 3);
        let op = sample_cdp(n, l, &mut rng).unwrap();
        let z = rand_cvec(n, &mut rng);
        if let MeasurementOperator::Cdp(c) = &op {
            let dense = c.to_dense();
            let via_fft = op.apply(&z);
            let via_dense = dense.dot(&z);
            for (a, b) in via_fft.iter().zip(via_dense.iter()) {
                assert!((a - b).norm() <= 1e-10 * via_dense.iter().map(|c| c.norm()).sum::<f64>());
            }
        }
    }

    #[test]
    fn adjoint_consistency_both_variants() {
        let mut rng = Rng::seed_from_u64(29);
        let ops = vec![
            sample_gaussian(24, 9, &mut rng).unwrap(),
            sample_cdp(9, 3, &mut rng).unwrap(),
        ];
        for op in &ops {
            for _ in 0..5 {
                let z = rand_cvec(op.cols(), &mut rng);
                let u = rand_cvec(op.rows(), &mut rng);
                let az = op.apply(&z);
                let atu = op.adjoint_apply(&u);
                let lhs = inner(&u, &az);
                let rhs = inner(&atu, &z);
                let scale = crate::core::norm(&az) * crate::core::norm(&u);
                assert!((lhs - rhs).norm() <= 1e-10 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn intensity_phase_invariant_and_cases() {
        let mut rng = Rng::seed_from_u64(31);
        let op = sample_gaussian(10, 4, &mut rng).unwrap();
        let z = rand_cvec(4, &mut rng);
        let y0 = forward_intensity(&op, &z).unwrap();
        let zr = z.mapv(|c| c * C::from_polar(1.0, 1.234));
        let y1 = forward_intensity(&op, &zr).unwrap();
        for (a, b) in y0.iter().zip(y1.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12 * a.abs().max(1.0));
        }

        let zero = CVector::zeros(4);
        let yz = forward_intensity(&op, &zero).unwrap();
        assert!(yz.iter().all(|&v| v == 0.0));

        // Identity rows reproduce |x|^2 elementwise.
        let eye = MeasurementOperator::dense(CMatrix::eye(4));
        let yx = forward_intensity(&eye, &z).unwrap();
        for (v, x) in yx.iter().zip(z.iter()) {
            assert_abs_diff_eq!(v, &x.norm_sqr(), epsilon = 1e-12);
        }

        // Row stored as a_1^* = [1, i]: a_1^* z = 1 + i, intensity 2.
        let a = array![[C::new(1.0, 0.0), C::new(0.0, 1.0)]];
        let op1 = MeasurementOperator::dense(a);
        let z1: CVector = array![C::new(1.0, 0.0), C::new(1.0, 0.0)];
        let y1 = forward_intensity(&op1, &z1).unwrap();
        assert_abs_diff_eq!(y1[0], 2.0, epsilon = 1e-12);

        let bad = CVector::zeros(3);
        assert!(forward_intensity(&op, &bad).is_err());
    }
}
