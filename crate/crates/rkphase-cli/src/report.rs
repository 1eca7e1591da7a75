//! CSV and JSON result emission.
//!
//! Column sets are versioned by the config `schema_version`; float fields
//! use Rust's shortest round-trip formatting so output bytes are stable
//! across runs and thread counts (timing columns aside).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use rkphase::harness::ResultTable;
use rkphase::solver::{IterRecord, SolverResult};

use crate::CliResult;

pub const TRIAL_HEADER: &[&str] = &[
    "algorithm",
    "sweep_var",
    "sweep_value",
    "trial",
    "seed",
    "dist",
    "rel_err",
    "iters",
    "success",
    "wall_ms",
];

pub const AGGREGATE_HEADER: &[&str] = &[
    "algorithm",
    "sweep_var",
    "sweep_value",
    "trials",
    "are",
    "success_prob",
];

pub const TRACE_HEADER: &[&str] = &["iter", "loss", "rel_err", "kept_count", "step"];

pub fn write_trial_csv(path: &Path, table: &ResultTable) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::CliError::io(e.to_string()))?;
    w.write_record(TRIAL_HEADER)
        .map_err(|e| crate::CliError::io(e.to_string()))?;
    for r in &table.records {
        w.write_record(&[
            r.algorithm.clone(),
            table.sweep_var.clone(),
            format!("{}", r.sweep_value),
            format!("{}", r.trial),
            format!("{}", r.seed),
            format!("{}", r.dist),
            format!("{}", r.rel_err),
            format!("{}", r.iterations),
            format!("{}", r.success),
            format!("{}", r.wall_ms),
        ])
        .map_err(|e| crate::CliError::io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregates_csv(path: &Path, table: &ResultTable) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::CliError::io(e.to_string()))?;
    w.write_record(AGGREGATE_HEADER)
        .map_err(|e| crate::CliError::io(e.to_string()))?;
    for a in &table.aggregates {
        w.write_record(&[
            a.algorithm.clone(),
            a.sweep_var.clone(),
            format!("{}", a.sweep_value),
            format!("{}", a.trials),
            format!("{}", a.are),
            format!("{}", a.success_prob),
        ])
        .map_err(|e| crate::CliError::io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar metadata for a bench run; documents aggregation conventions.
#[derive(Debug, Serialize)]
pub struct BenchMeta {
    pub schema_version: u32,
    pub sweep_var: String,
    pub trials_per_point: usize,
    pub success_threshold: f64,
    /// Relative errors are capped at this value in the ARE aggregates;
    /// failed or diverged trials enter at the cap.
    pub error_cap: f64,
    pub base_seed: u64,
    pub algorithms: Vec<String>,
}

pub fn write_bench_meta(path: &Path, meta: &BenchMeta) -> CliResult<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, meta).map_err(|e| crate::CliError::io(e.to_string()))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// JSON summary of a solve run; `rel_err`/`dist` appear only with ground
/// truth available.
#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub schema_version: u32,
    pub algorithm: String,
    pub n: usize,
    pub m: usize,
    pub iterations: usize,
    pub converged: bool,
    pub init_converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
    pub final_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_err: Option<f64>,
    pub wall_ms: f64,
}

impl SolveSummary {
    pub fn from_result(
        algorithm: &str,
        n: usize,
        m: usize,
        result: &SolverResult,
        dist: Option<f64>,
        rel_err: Option<f64>,
        wall_ms: f64,
    ) -> Self {
        SolveSummary {
            schema_version: crate::config::SCHEMA_VERSION,
            algorithm: algorithm.to_string(),
            n,
            m,
            iterations: result.iterations_used,
            converged: result.converged,
            init_converged: result.init_converged,
            aborted: result
                .abort
                .map(|a| format!("{} at iteration {}", a.reason, a.iter)),
            final_loss: result.trace.last().map(|t| t.loss).unwrap_or(f64::NAN),
            dist,
            rel_err,
            wall_ms,
        }
    }
}

pub fn write_solve_summary(path: &Path, summary: &SolveSummary) -> CliResult<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, summary)
        .map_err(|e| crate::CliError::io(e.to_string()))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, trace: &[IterRecord]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::CliError::io(e.to_string()))?;
    w.write_record(TRACE_HEADER)
        .map_err(|e| crate::CliError::io(e.to_string()))?;
    for r in trace {
        w.write_record(&[
            format!("{}", r.iter),
            format!("{}", r.loss),
            r.rel_err.map(|v| format!("{v}")).unwrap_or_default(),
            format!("{}", r.kept),
            format!("{}", r.step),
        ])
        .map_err(|e| crate::CliError::io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
