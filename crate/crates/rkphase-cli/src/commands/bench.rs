//! `rkphase bench`: run a Monte-Carlo sweep from a config file.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use rkphase::harness;

use crate::report::{self, BenchMeta};
use crate::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Experiment config file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Trial table CSV path; aggregates and metadata go to
    /// `<stem>.aggregates.csv` and `<stem>.meta.json` alongside it.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let spec = crate::config::parse_experiment(&fs::read_to_string(&args.config)?)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::io(e.to_string()))?;
    let table = pool
        .install(|| harness::run_experiment(&spec))
        .map_err(|e| CliError::usage(e.to_string()))?;

    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    report::write_trial_csv(&args.out, &table)?;
    report::write_aggregates_csv(&args.out.with_extension("aggregates.csv"), &table)?;
    report::write_bench_meta(
        &args.out.with_extension("meta.json"),
        &BenchMeta {
            schema_version: crate::config::SCHEMA_VERSION,
            sweep_var: table.sweep_var.clone(),
            trials_per_point: spec.trials,
            success_threshold: table.success_threshold,
            error_cap: table.error_cap,
            base_seed: spec.base_seed,
            algorithms: spec.algorithms.iter().map(|a| a.name.clone()).collect(),
        },
    )?;
    Ok(())
}
