//! `rkphase surface`: evaluate a loss landscape over a real 2-D grid and
//! export it as long-format CSV for external plotting.

use std::path::PathBuf;

use clap::Args;

use rkphase::losses::{LossKind, DEFAULT_LAMBDA, DEFAULT_POISSON_EPS};
use rkphase::models::{loss_surface_grid, GridSpec, Operator};

use crate::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    /// Instance directory produced by `gen` (must have N = 2).
    #[arg(long = "in")]
    pub in_dir: PathBuf,
    /// Loss kind: rkld | intensity-l2 | poisson-fkld | reshaped-l2.
    #[arg(long, default_value = "rkld")]
    pub loss: String,
    /// Regularizer for the reverse-KL loss.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Grid half-width; the grid spans [-half-width, half-width]^2.
    #[arg(long = "half-width", default_value_t = 2.5)]
    pub half_width: f64,
    /// Points per axis.
    #[arg(long, default_value_t = 41)]
    pub count: usize,
    /// Output CSV (columns u, v, value).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &SurfaceArgs) -> CliResult<()> {
    let problem = super::solve::load_instance_dir(&args.in_dir)?;
    let kind = match args.loss.as_str() {
        "rkld" => LossKind::RkldRegularized {
            lambda: args.lambda,
        },
        "intensity-l2" => LossKind::IntensityL2,
        "poisson-fkld" => LossKind::PoissonFkld {
            eps: DEFAULT_POISSON_EPS,
        },
        "reshaped-l2" => LossKind::ReshapedL2,
        other => {
            return Err(CliError::usage(format!(
                "unknown loss `{other}` (expected rkld|intensity-l2|poisson-fkld|reshaped-l2)"
            )))
        }
    };
    if problem.op.cols() != 2 {
        return Err(CliError::usage(format!(
            "surface grids require N = 2, instance has N = {}",
            problem.op.cols()
        )));
    }
    let grid = GridSpec::square(args.half_width, args.count);
    let values = loss_surface_grid(&problem.op, &problem.y, &kind, &grid)
        .map_err(|e| CliError::usage(e.to_string()))?;

    let mut w = csv::Writer::from_path(&args.out).map_err(|e| CliError::io(e.to_string()))?;
    w.write_record(["u", "v", "value"])
        .map_err(|e| CliError::io(e.to_string()))?;
    let axis = |i: usize| -> f64 {
        if args.count == 1 {
            -args.half_width
        } else {
            -args.half_width + 2.0 * args.half_width * (i as f64) / ((args.count - 1) as f64)
        }
    };
    for i in 0..args.count {
        for j in 0..args.count {
            w.write_record(&[
                format!("{}", axis(i)),
                format!("{}", axis(j)),
                format!("{}", values[[i, j]]),
            ])
            .map_err(|e| CliError::io(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}
