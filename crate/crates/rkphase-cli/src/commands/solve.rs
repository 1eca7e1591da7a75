//! `rkphase solve`: run a solver on a generated directory or on externally
//! supplied operator/measurement files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;

use rkphase::core::{dist_up_to_phase, norm};
use rkphase::models::{
    CorruptionSpec, InstanceMeta, MeasurementOperator, ModelKind, Operator, ProblemInstance,
};
use rkphase::solver::{self, SolverConfig};
use rkphase::{CVector, Rng};

use crate::commands::{gen::GenMeta, FILE_DENSE, FILE_META, FILE_PATTERNS, FILE_X, FILE_Y};
use crate::report::{self, SolveSummary};
use crate::{arrayfile, CliError, CliResult};

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance directory produced by `gen`.
    #[arg(long = "in", conflicts_with_all = ["a_file", "y_file"])]
    pub in_dir: Option<PathBuf>,
    /// Dense operator file (c64 matrix), for external data.
    #[arg(long = "a", requires = "y_file")]
    pub a_file: Option<PathBuf>,
    /// Measurement file (c64 vector with zero imaginary parts).
    #[arg(long = "y", requires = "a_file")]
    pub y_file: Option<PathBuf>,
    /// Solver preset name.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Solver config file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Summary JSON path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-iteration trace CSV path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Reconstruction output (c64 vector file).
    #[arg(long = "save-z")]
    pub save_z: Option<PathBuf>,
    /// Seed for the spectral initializer's start vector.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub(crate) fn load_instance_dir(dir: &Path) -> CliResult<ProblemInstance> {
    let meta_path = dir.join(FILE_META);
    let meta: GenMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)
        .map_err(|e| CliError::io(format!("{}: {e}", meta_path.display())))?;
    let model = crate::config::parse_model_kind(&meta.model)?;
    let op = match model {
        ModelKind::Gaussian => {
            let p = dir.join(FILE_DENSE);
            MeasurementOperator::Dense(arrayfile::read_matrix(&p)?)
        }
        ModelKind::Cdp => {
            let p = dir.join(FILE_PATTERNS);
            MeasurementOperator::cdp(arrayfile::read_matrix(&p)?)
        }
    };
    let y_path = dir.join(FILE_Y);
    let y = arrayfile::read_real_vector(&y_path)?;
    if y.len() != op.rows() {
        return Err(CliError::usage(format!(
            "dimension mismatch: {} has {} entries but the operator has {} rows",
            y_path.display(),
            y.len(),
            op.rows()
        )));
    }
    let x_path = dir.join(FILE_X);
    let x_true: Option<CVector> = if x_path.exists() {
        let x = arrayfile::read_vector(&x_path)?;
        if x.len() != op.cols() {
            return Err(CliError::usage(format!(
                "dimension mismatch: {} has {} entries but the operator has {} columns",
                x_path.display(),
                x.len(),
                op.cols()
            )));
        }
        Some(x)
    } else {
        None
    };
    Ok(ProblemInstance {
        op,
        y,
        x_true,
        meta: InstanceMeta {
            model,
            corruption: CorruptionSpec {
                sigma: meta.sigma,
                theta: meta.theta,
                rho: meta.rho,
                signed_outliers: meta.signed_outliers,
            },
            seed: meta.seed,
        },
    })
}

fn load_from_files(a_path: &Path, y_path: &Path) -> CliResult<ProblemInstance> {
    let a = arrayfile::read_matrix(a_path)?;
    let y = arrayfile::read_real_vector(y_path)?;
    if y.len() != a.nrows() {
        return Err(CliError::usage(format!(
            "dimension mismatch: {} has {} entries but {} has {} rows",
            y_path.display(),
            y.len(),
            a_path.display(),
            a.nrows()
        )));
    }
    Ok(ProblemInstance {
        op: MeasurementOperator::Dense(a),
        y,
        x_true: None,
        meta: InstanceMeta {
            model: ModelKind::Gaussian,
            corruption: CorruptionSpec::clean(),
            seed: 0,
        },
    })
}

fn resolve_config(args: &SolveArgs) -> CliResult<(String, SolverConfig)> {
    match (&args.preset, &args.config) {
        (Some(name), None) => {
            let cfg = solver::preset(name).map_err(|e| CliError::usage(e.to_string()))?;
            Ok((name.clone(), cfg))
        }
        (None, Some(path)) => crate::config::parse_solver(&fs::read_to_string(path)?),
        (None, None) => Err(CliError::usage("supply --preset or --config")),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    }
}

pub fn run(args: &SolveArgs) -> CliResult<()> {
    let problem = match (&args.in_dir, &args.a_file, &args.y_file) {
        (Some(dir), None, None) => load_instance_dir(dir)?,
        (None, Some(a), Some(y)) => load_from_files(a, y)?,
        _ => {
            return Err(CliError::usage(
                "supply either --in DIR or both --a FILE and --y FILE",
            ))
        }
    };
    let (name, config) = resolve_config(args)?;

    let mut rng = Rng::seed_from_u64(args.seed);
    let started = Instant::now();
    let result =
        solver::run(&problem, &config, &mut rng).map_err(|e| CliError::usage(e.to_string()))?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let (dist, rel_err) = match &problem.x_true {
        Some(x) => {
            let d =
                dist_up_to_phase(x, &result.z_final).map_err(|e| CliError::usage(e.to_string()))?;
            (Some(d), Some(d / norm(x)))
        }
        None => (None, None),
    };

    let summary = SolveSummary::from_result(
        &name,
        problem.op.cols(),
        problem.op.rows(),
        &result,
        dist,
        rel_err,
        wall_ms,
    );
    match &args.out {
        Some(path) => report::write_solve_summary(path, &summary)?,
        None => {
            let text =
                serde_json::to_string_pretty(&summary).map_err(|e| CliError::io(e.to_string()))?;
            println!("{text}");
        }
    }
    if let Some(path) = &args.trace {
        report::write_trace_csv(path, &result.trace)?;
    }
    if let Some(path) = &args.save_z {
        arrayfile::write_vector(path, &result.z_final)?;
    }
    Ok(())
}
