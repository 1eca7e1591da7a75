//! Loss-surface grids over real 2-D estimates, for export to external
//! plotting tools.

use num_complex::Complex64;

use crate::core::{CVector, RVector};
use crate::error::{invalid, Result};
use crate::losses::{self, LossKind};
use crate::models::Operator;

/// Rectangular evaluation grid for `z = (u, v)` real.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub u_min: f64,
    pub u_max: f64,
    pub u_count: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub v_count: usize,
}

impl GridSpec {
    /// Symmetric square grid centered on the origin.
    pub fn square(half_width: f64, count: usize) -> Self {
        GridSpec {
            u_min: -half_width,
            u_max: half_width,
            u_count: count,
            v_min: -half_width,
            v_max: half_width,
            v_count: count,
        }
    }

    fn axis(min: f64, max: f64, count: usize, i: usize) -> f64 {
        if count == 1 {
            min
        } else {
            min + (max - min) * (i as f64) / ((count - 1) as f64)
        }
    }
}

/// Evaluate `loss(z)` over the grid for `N = 2` problems; rows index the
/// first coordinate, columns the second.
pub fn loss_surface_grid(
    op: &dyn Operator,
    y: &RVector,
    kind: &LossKind,
    grid: &GridSpec,
) -> Result<ndarray::Array2<f64>> {
    if op.cols() != 2 {
        return Err(invalid("loss_surface_grid: operator must have N = 2"));
    }
    if grid.u_count == 0 || grid.v_count == 0 {
        return Err(invalid("loss_surface_grid: empty grid"));
    }
    let mut out = ndarray::Array2::zeros((grid.u_count, grid.v_count));
    for i in 0..grid.u_count {
        let u = GridSpec::axis(grid.u_min, grid.u_max, grid.u_count, i);
        for j in 0..grid.v_count {
            let v = GridSpec::axis(grid.v_min, grid.v_max, grid.v_count, j);
            let z: CVector = ndarray::array![Complex64::new(u, 0.0), Complex64::new(v, 0.0)];
            let q = op.apply(&z).mapv(|c| c.norm_sqr());
            out[[i, j]] = losses::value_from_intensities(kind, &q, y)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::Rng;
    use crate::models::{forward_intensity, sample_gaussian};
    use ndarray::array;
    use num_complex::Complex64 as C;

    #[test]
    fn shape_matches_grid() {
        let mut rng = Rng::seed_from_u64(71);
        let op = sample_gaussian(30, 2, &mut rng).unwrap();
        let y = RVector::from_elem(30, 1.0);
        let g = loss_surface_grid(&op, &y, &LossKind::rkld(), &GridSpec::square(2.0, 3)).unwrap();
        assert_eq!(g.dim(), (3, 3));
    }

    #[test]
    fn truth_is_global_minimum_on_grid() {
        let mut rng = Rng::seed_from_u64(73);
        let op = sample_gaussian(60, 2, &mut rng).unwrap();
        let x: CVector = array![C::new(1.0, 0.0), C::new(1.0, 0.0)];
        let y = forward_intensity(&op, &x).unwrap();
        // 5-point axis includes (1, 1) exactly.
        let grid = GridSpec::square(2.0, 5);
        let g = loss_surface_grid(&op, &y, &LossKind::rkld(), &grid).unwrap();
        let at_truth = g[[3, 3]]; // axis: -2, -1, 0, 1, 2
        for v in g.iter() {
            assert!(at_truth <= v + 1e-12);
        }
        assert!(at_truth.abs() < 1e-10);
    }

    #[test]
    fn symmetric_grid_is_sign_symmetric() {
        let mut rng = Rng::seed_from_u64(79);
        let op = sample_gaussian(40, 2, &mut rng).unwrap();
        let y = RVector::from_shape_fn(40, |_| rng.uniform(0.1, 2.0));
        let grid = GridSpec::square(1.5, 7);
        let g = loss_surface_grid(&op, &y, &LossKind::IntensityL2, &grid).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let a = g[[i, j]];
                let b = g[[6 - i, 6 - j]];
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn wrong_dimension_rejected() {
        let mut rng = Rng::seed_from_u64(83);
        let op = sample_gaussian(10, 3, &mut rng).unwrap();
        let y = RVector::from_elem(10, 1.0);
        assert!(loss_surface_grid(&op, &y, &LossKind::rkld(), &GridSpec::square(1.0, 3)).is_err());
    }
}
