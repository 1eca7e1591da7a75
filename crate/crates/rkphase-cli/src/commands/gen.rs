//! `rkphase gen`: write a seeded problem instance to a directory.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use rkphase::core::{mix_seed, norm};
use rkphase::harness::{generate_problem, signal_draw, SignalKind};
use rkphase::models::{CorruptionSpec, MeasurementOperator, ModelKind};
use rkphase::Rng;

use crate::commands::{FILE_DENSE, FILE_META, FILE_PATTERNS, FILE_X, FILE_Y};
use crate::config::parse_model_kind;
use crate::{arrayfile, CliError, CliResult};

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Sampling model: gaussian | cdp.
    #[arg(long)]
    pub model: String,
    /// Signal dimension N.
    #[arg(long)]
    pub n: usize,
    /// Oversampling factor M/N (gaussian model).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of modulation patterns L (cdp model; M = L * N).
    #[arg(long = "l-patterns")]
    pub l_patterns: Option<usize>,
    /// Uniform noise level relative to ||x||^2.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Outlier magnitude level relative to ||x||^2.
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    /// Outlier fraction in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// Draw outlier signs uniformly instead of nonnegative.
    #[arg(long, default_value_t = false)]
    pub signed_outliers: bool,
    #[arg(long)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth signal family: complex-gaussian | real-gaussian.
    #[arg(long, default_value = "complex-gaussian")]
    pub signal: String,
}

/// Instance directory metadata.
#[derive(Debug, Serialize, Deserialize)]
pub struct GenMeta {
    pub schema_version: u32,
    pub model: String,
    pub n: usize,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patterns: Option<usize>,
    pub sigma: f64,
    pub theta: f64,
    pub rho: f64,
    pub signed_outliers: bool,
    pub seed: u64,
    pub x_norm_sq: f64,
}

pub fn run(args: &GenArgs) -> CliResult<()> {
    let model = parse_model_kind(&args.model)?;
    let signal = match args.signal.as_str() {
        "complex-gaussian" => SignalKind::ComplexGaussian,
        "real-gaussian" => SignalKind::RealGaussian,
        other => return Err(CliError::usage(format!("unknown signal kind `{other}`"))),
    };
    if args.n == 0 {
        return Err(CliError::usage("--n must be >= 1"));
    }
    let (alpha, patterns) = match model {
        ModelKind::Gaussian => {
            let a = args
                .alpha
                .ok_or_else(|| CliError::usage("gaussian model requires --alpha"))?;
            // Negated form also rejects NaN.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(a > 0.0) {
                return Err(CliError::usage("--alpha must be positive"));
            }
            (a, 1)
        }
        ModelKind::Cdp => {
            let l = args
                .l_patterns
                .ok_or_else(|| CliError::usage("cdp model requires --l-patterns"))?;
            if l == 0 {
                return Err(CliError::usage("--l-patterns must be >= 1"));
            }
            (1.0, l)
        }
    };
    let corruption = CorruptionSpec {
        sigma: args.sigma,
        theta: args.theta,
        rho: args.rho,
        signed_outliers: args.signed_outliers,
    };
    corruption
        .validate()
        .map_err(|e| CliError::usage(e.to_string()))?;

    let mut x_rng = Rng::seed_from_u64(mix_seed(args.seed, &[0]));
    let x = signal_draw(signal, args.n, &mut x_rng);
    let generated = generate_problem(model, args.n, alpha, patterns, &corruption, &x, args.seed)
        .map_err(|e| CliError::usage(e.to_string()))?;

    fs::create_dir_all(&args.out)?;
    match &generated.instance.op {
        MeasurementOperator::Dense(a) => {
            arrayfile::write_matrix(&args.out.join(FILE_DENSE), a)?;
        }
        MeasurementOperator::Cdp(c) => {
            arrayfile::write_matrix(&args.out.join(FILE_PATTERNS), c.patterns())?;
        }
    }
    arrayfile::write_real_vector(&args.out.join(FILE_Y), &generated.instance.y)?;
    arrayfile::write_vector(&args.out.join(FILE_X), &x)?;

    let m = generated.instance.y.len();
    let meta = GenMeta {
        schema_version: crate::config::SCHEMA_VERSION,
        model: args.model.clone(),
        n: args.n,
        m,
        alpha: matches!(model, ModelKind::Gaussian).then_some(alpha),
        patterns: matches!(model, ModelKind::Cdp).then_some(patterns),
        sigma: args.sigma,
        theta: args.theta,
        rho: args.rho,
        signed_outliers: args.signed_outliers,
        seed: args.seed,
        x_norm_sq: norm(&x) * norm(&x),
    };
    let mut f = std::io::BufWriter::new(fs::File::create(args.out.join(FILE_META))?);
    serde_json::to_writer_pretty(&mut f, &meta).map_err(|e| CliError::io(e.to_string()))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}
