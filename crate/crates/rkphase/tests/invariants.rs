//! Cross-module invariants checked against independent oracles: brute-force
//! phase search, finite differences, and dense materializations.

use ndarray::Array1;
use num_complex::Complex64 as C;
use proptest::prelude::*;

use rkphase::core::{dist_up_to_phase, inner, norm, relative_error, CVector, RVector, Rng};
use rkphase::losses::{self, LossKind};
use rkphase::models::{
    forward_intensity, sample_cdp, sample_gaussian, MeasurementOperator, Operator,
};
use rkphase::solver::{self, InitKind, SolverConfig};
use rkphase::truncation::mean_residual_mask;

fn rand_cvec(n: usize, rng: &mut Rng) -> CVector {
    (0..n).map(|_| rng.complex_standard_normal()).collect()
}

/// Brute-force minimum of ||x e^{i phi} - z|| over a dense phi grid.
fn dist_grid_oracle(x: &CVector, z: &CVector, grid: usize) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..grid {
        let phi = 2.0 * std::f64::consts::PI * (k as f64) / (grid as f64);
        let rot = C::from_polar(1.0, phi);
        let d: f64 = x
            .iter()
            .zip(z.iter())
            .map(|(a, b)| (a * rot - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        best = best.min(d);
    }
    best
}

#[test]
fn dist_matches_brute_force_grid() {
    let mut rng = Rng::seed_from_u64(1);
    for n in [1usize, 2, 5, 16] {
        for _ in 0..5 {
            let x = rand_cvec(n, &mut rng);
            let z = rand_cvec(n, &mut rng);
            let fast = dist_up_to_phase(&x, &z).unwrap();
            let brute = dist_grid_oracle(&x, &z, 100_000);
            assert!(
                (fast - brute).abs() <= 1e-8 * brute.max(1.0),
                "closed form {fast} vs grid {brute}"
            );
        }
    }
}

#[test]
fn dist_matches_closed_form_expression() {
    let mut rng = Rng::seed_from_u64(2);
    for _ in 0..20 {
        let x = rand_cvec(8, &mut rng);
        let z = rand_cvec(8, &mut rng);
        let fast = dist_up_to_phase(&x, &z).unwrap();
        let nx = norm(&x);
        let nz = norm(&z);
        let closed = (nx * nx + nz * nz - 2.0 * inner(&x, &z).norm())
            .max(0.0)
            .sqrt();
        assert!((fast - closed).abs() <= 1e-8 * closed.max(1.0));
    }
}

/// Wirtinger gradient via central differences of the loss value, using the
/// df/d(conj z) = (df/dRe + i df/dIm) / 2 mapping. Calibrated by the
/// one-dimensional hand case in the loss unit tests.
fn fd_gradient(kind: &LossKind, z: &CVector, op: &dyn Operator, y: &RVector) -> CVector {
    let value = |zz: &CVector| -> f64 {
        let q = op.apply(zz).mapv(|c| c.norm_sqr());
        losses::value_from_intensities(kind, &q, y).unwrap()
    };
    let n = z.len();
    let mut g = CVector::zeros(n);
    for i in 0..n {
        let h = 1e-6 * z[i].norm().max(1.0);
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[i] += C::new(h, 0.0);
        zm[i] -= C::new(h, 0.0);
        let d_re = (value(&zp) - value(&zm)) / (2.0 * h);
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[i] += C::new(0.0, h);
        zm[i] -= C::new(0.0, h);
        let d_im = (value(&zp) - value(&zm)) / (2.0 * h);
        g[i] = C::new(d_re / 2.0, d_im / 2.0);
    }
    g
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut rng = Rng::seed_from_u64(3);
    let (m, n) = (10, 4);
    let op = sample_gaussian(m, n, &mut rng).unwrap();
    let y = RVector::from_shape_fn(m, |_| rng.uniform(0.3, 3.0));
    for kind in [
        LossKind::rkld(),
        LossKind::IntensityL2,
        LossKind::poisson(),
        LossKind::ReshapedL2,
    ] {
        for _ in 0..3 {
            let z = rand_cvec(n, &mut rng);
            let analytic = losses::eval(&kind, &z, &op, &y).unwrap().grad;
            let fd = fd_gradient(&kind, &z, &op, &y);
            let err: f64 = analytic
                .iter()
                .zip(fd.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let scale = norm(&fd);
            assert!(
                err <= 1e-6 * scale.max(1e-12),
                "{}: fd mismatch {err:.3e} vs scale {scale:.3e}",
                kind.name()
            );
        }
    }
}

#[test]
fn cdp_gradient_matches_dense_materialization() {
    let mut rng = Rng::seed_from_u64(4);
    let (n, l) = (12, 3);
    let op = sample_cdp(n, l, &mut rng).unwrap();
    let x = rand_cvec(n, &mut rng);
    let y = forward_intensity(&op, &x).unwrap();
    let z = rand_cvec(n, &mut rng);

    let dense = match &op {
        MeasurementOperator::Cdp(c) => MeasurementOperator::Dense(c.to_dense()),
        _ => unreachable!(),
    };
    let g_fft = losses::rkld_grad(&z, &op, &y, 1e-8).unwrap();
    let g_dense = losses::rkld_grad(&z, &dense, &y, 1e-8).unwrap();
    let diff: f64 = g_fft
        .iter()
        .zip(g_dense.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!(diff <= 1e-9 * norm(&g_dense).max(1.0));
}

#[test]
fn end_to_end_noiseless_recovery_single_seed() {
    let mut rng = Rng::seed_from_u64(5);
    let n = 32;
    let x = rand_cvec(n, &mut rng);
    let op = sample_gaussian(6 * n, n, &mut rng).unwrap();
    let y = forward_intensity(&op, &x).unwrap();
    let problem = rkphase::models::ProblemInstance {
        op,
        y,
        x_true: Some(x.clone()),
        meta: rkphase::models::InstanceMeta {
            model: rkphase::models::ModelKind::Gaussian,
            corruption: rkphase::models::CorruptionSpec::clean(),
            seed: 5,
        },
    };
    let config = solver::preset("rkld-wf-gaussian").unwrap();
    let mut solver_rng = Rng::seed_from_u64(99);
    let result = solver::run(&problem, &config, &mut solver_rng).unwrap();
    let err = relative_error(&x, &result.z_final).unwrap();
    assert!(err <= 1e-10, "relative error {err:.3e}");
    assert!(result.converged);
}

#[test]
fn provided_init_survives_round_trip_through_config() {
    // InitKind::Provided is library-only; sanity-check it threads through.
    let mut rng = Rng::seed_from_u64(6);
    let n = 8;
    let x = rand_cvec(n, &mut rng);
    let op = sample_gaussian(5 * n, n, &mut rng).unwrap();
    let y = forward_intensity(&op, &x).unwrap();
    let problem = rkphase::models::ProblemInstance {
        op,
        y,
        x_true: Some(x.clone()),
        meta: rkphase::models::InstanceMeta {
            model: rkphase::models::ModelKind::Gaussian,
            corruption: rkphase::models::CorruptionSpec::clean(),
            seed: 6,
        },
    };
    let config = SolverConfig {
        init: InitKind::Provided(x.clone()),
        ..SolverConfig::default()
    };
    let mut solver_rng = Rng::seed_from_u64(0);
    let result = solver::run(&problem, &config, &mut solver_rng).unwrap();
    assert!(result.converged);
    assert_eq!(result.iterations_used, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_dist_phase_invariant(
        entries in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..12),
        others in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..12),
        phi in 0.0f64..std::f64::consts::TAU,
    ) {
        let n = entries.len().min(others.len());
        let x: CVector = entries[..n].iter().map(|&(re, im)| C::new(re, im)).collect();
        let z: CVector = others[..n].iter().map(|&(re, im)| C::new(re, im)).collect();
        let d0 = dist_up_to_phase(&x, &z).unwrap();
        let rot = C::from_polar(1.0, phi);
        let d1 = dist_up_to_phase(&x.mapv(|c| c * rot), &z).unwrap();
        let d2 = dist_up_to_phase(&x, &z.mapv(|c| c * rot)).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-9 * d0.max(1.0));
        prop_assert!((d0 - d2).abs() <= 1e-9 * d0.max(1.0));
    }

    #[test]
    fn prop_rkld_value_nonnegative(
        seed in 0u64..1000,
        lambda in 1e-10f64..1e-2,
    ) {
        let mut rng = Rng::seed_from_u64(seed);
        let op = sample_gaussian(8, 3, &mut rng).unwrap();
        let z = rand_cvec(3, &mut rng);
        let y = RVector::from_shape_fn(8, |_| rng.uniform(0.0, 4.0));
        let v = losses::rkld_value(&z, &op, &y, lambda).unwrap();
        prop_assert!(v >= -1e-12);
    }

    #[test]
    fn prop_mean_mask_keeps_fit_rows(seed in 0u64..500) {
        // Rows with zero residual survive any threshold.
        let mut rng = Rng::seed_from_u64(seed);
        let op = sample_gaussian(10, 3, &mut rng).unwrap();
        let x = rand_cvec(3, &mut rng);
        let mut y = forward_intensity(&op, &x).unwrap();
        // Perturb half the rows.
        for i in 0..5 {
            y[i] += rng.uniform(0.0, 5.0);
        }
        let mask = mean_residual_mask(&x, &op, &y, 3.0).unwrap();
        for i in 5..10 {
            prop_assert!(mask.is_kept(i));
        }
    }
}

#[test]
fn forward_intensity_vector_consistency() {
    // |Az|^2 computed through the operator equals the per-row inner product.
    let mut rng = Rng::seed_from_u64(7);
    let op = sample_gaussian(14, 6, &mut rng).unwrap();
    let z = rand_cvec(6, &mut rng);
    let y = forward_intensity(&op, &z).unwrap();
    if let MeasurementOperator::Dense(a) = &op {
        for (m, row) in a.rows().into_iter().enumerate() {
            let dot: C = row.iter().zip(z.iter()).map(|(am, zn)| am * zn).sum();
            assert!((y[m] - dot.norm_sqr()).abs() <= 1e-12 * y[m].max(1.0));
        }
    }
    let _ = Array1::<f64>::zeros(1);
}
