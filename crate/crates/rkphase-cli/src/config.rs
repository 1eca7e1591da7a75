//! TOML config schema for experiments and solver runs.
//!
//! Unknown keys are rejected. Every file carries a `schema_version` integer
//! (currently 1). Algorithms are preset names, optionally with overrides:
//!
//! ```toml
//! schema_version = 1
//!
//! [model]
//! kind = "gaussian"     # or "cdp"
//! n = 64
//! alpha = 6.0           # default oversampling (gaussian; M = round(alpha n))
//! patterns = 8          # default pattern count (cdp; M = patterns * n)
//!
//! [signal]
//! kind = "complex-gaussian"   # or "real-gaussian"
//! fresh_per_trial = false
//!
//! [corruption]
//! sigma = 0.0
//! theta = 0.0
//! rho = 0.0
//! signed_outliers = false
//!
//! [sweep]
//! var = "alpha"               # alpha | patterns | sigma | theta | rho
//! values = [3.0, 4.0, 5.0, 6.0]
//!
//! [run]
//! algorithms = ["rkld-wf-gaussian", { preset = "wf-l2", name = "wf" }]
//! trials = 30
//! base_seed = 7
//! max_iters = 1000            # optional K override for every algorithm
//! success_threshold = 1e-5    # optional
//! error_cap = 10.0            # optional
//! ```
//!
//! Step overrides: an explicit `step = "fixed" | "heuristic" | "backtracking"`
//! wins; otherwise setting `mu` switches to a fixed step and setting `k0` /
//! `mu_max` switches to the heuristic ramp.

use serde::Deserialize;

use rkphase::harness::{AlgorithmSpec, ExperimentSpec, SignalKind, SweepVar};
use rkphase::losses::LossKind;
use rkphase::models::{CorruptionSpec, ModelKind};
use rkphase::solver::{self, InitKind, SolverConfig, StepPolicy};
use rkphase::truncation::{self, TruncationKind};

use crate::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub schema_version: u32,
    pub model: ModelSection,
    #[serde(default)]
    pub signal: SignalSection,
    #[serde(default)]
    pub corruption: CorruptionSection,
    pub sweep: SweepSection,
    pub run: RunSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: String,
    pub n: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_patterns")]
    pub patterns: usize,
}

fn default_alpha() -> f64 {
    6.0
}

fn default_patterns() -> usize {
    8
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    #[serde(default = "default_signal_kind")]
    pub kind: String,
    #[serde(default)]
    pub fresh_per_trial: bool,
}

fn default_signal_kind() -> String {
    "complex-gaussian".to_string()
}

impl Default for SignalSection {
    fn default() -> Self {
        SignalSection {
            kind: default_signal_kind(),
            fresh_per_trial: false,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionSection {
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub signed_outliers: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub var: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub algorithms: Vec<AlgorithmEntry>,
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub success_threshold: Option<f64>,
    #[serde(default)]
    pub error_cap: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum AlgorithmEntry {
    Preset(String),
    Custom(Box<AlgorithmTable>),
}

/// Preset plus overrides; also the body of a solve-config `[solver]` table.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmTable {
    pub preset: String,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub step: Option<String>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub k0: Option<f64>,
    #[serde(default)]
    pub mu_max: Option<f64>,
    #[serde(default)]
    pub mu0: Option<f64>,
    #[serde(default)]
    pub shrink: Option<f64>,
    #[serde(default)]
    pub slope: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub truncation: Option<String>,
    #[serde(default)]
    pub gamma_e: Option<f64>,
    #[serde(default)]
    pub gamma_ub: Option<f64>,
    #[serde(default)]
    pub gamma_h: Option<f64>,
    #[serde(default)]
    pub init: Option<String>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub stop_tol: Option<f64>,
    #[serde(default)]
    pub normalize_step: Option<bool>,
    #[serde(default)]
    pub scale_grad_by_m: Option<bool>,
    #[serde(default)]
    pub init_scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveFile {
    pub schema_version: u32,
    pub solver: AlgorithmTable,
}

fn check_schema_version(v: u32) -> CliResult<()> {
    if v != SCHEMA_VERSION {
        return Err(CliError::usage(format!(
            "unsupported schema_version {v} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

pub fn parse_model_kind(s: &str) -> CliResult<ModelKind> {
    match s {
        "gaussian" => Ok(ModelKind::Gaussian),
        "cdp" => Ok(ModelKind::Cdp),
        other => Err(CliError::usage(format!(
            "unknown model kind `{other}` (expected gaussian|cdp)"
        ))),
    }
}

fn parse_signal_kind(s: &str) -> CliResult<SignalKind> {
    match s {
        "complex-gaussian" => Ok(SignalKind::ComplexGaussian),
        "real-gaussian" => Ok(SignalKind::RealGaussian),
        other => Err(CliError::usage(format!(
            "unknown signal kind `{other}` (expected complex-gaussian|real-gaussian)"
        ))),
    }
}

fn parse_sweep_var(s: &str) -> CliResult<SweepVar> {
    match s {
        "alpha" => Ok(SweepVar::Alpha),
        "patterns" => Ok(SweepVar::Patterns),
        "sigma" => Ok(SweepVar::Sigma),
        "theta" => Ok(SweepVar::Theta),
        "rho" => Ok(SweepVar::Rho),
        other => Err(CliError::usage(format!(
            "unknown sweep var `{other}` (expected alpha|patterns|sigma|theta|rho)"
        ))),
    }
}

impl AlgorithmTable {
    /// Resolve into a named solver configuration.
    pub fn resolve(&self) -> CliResult<(String, SolverConfig)> {
        let mut cfg = solver::preset(&self.preset).map_err(|e| CliError::usage(e.to_string()))?;
        let name = self.name.clone().unwrap_or_else(|| self.preset.clone());

        if let Some(lambda) = self.lambda {
            match &mut cfg.loss {
                LossKind::RkldRegularized { lambda: l } => *l = lambda,
                _ => {
                    return Err(CliError::usage(
                        "lambda override requires a reverse-KL preset",
                    ))
                }
            }
        }
        if let Some(eps) = self.eps {
            match &mut cfg.loss {
                LossKind::PoissonFkld { eps: e } => *e = eps,
                _ => return Err(CliError::usage("eps override requires a Poisson preset")),
            }
        }

        let trunc_name = match &self.truncation {
            Some(t) => t.as_str(),
            None => cfg.truncation.name(),
        };
        let existing = cfg.truncation;
        let pick_e = |fallback: f64| self.gamma_e.unwrap_or(fallback);
        let pick_ub = |fallback: f64| self.gamma_ub.unwrap_or(fallback);
        let pick_h = |fallback: f64| self.gamma_h.unwrap_or(fallback);
        cfg.truncation = match trunc_name {
            "none" => TruncationKind::None,
            "mean-residual" => TruncationKind::MeanResidual {
                gamma_e: pick_e(match existing {
                    TruncationKind::MeanResidual { gamma_e } => gamma_e,
                    _ => truncation::DEFAULT_GAMMA_E,
                }),
            },
            "median-residual" => {
                let (e0, ub0) = match existing {
                    TruncationKind::MedianResidual { gamma_ub, gamma_e } => (gamma_e, gamma_ub),
                    _ => (truncation::DEFAULT_GAMMA_E, truncation::DEFAULT_GAMMA_UB),
                };
                TruncationKind::MedianResidual {
                    gamma_ub: pick_ub(ub0),
                    gamma_e: pick_e(e0),
                }
            }
            "one-sided-log" => TruncationKind::OneSidedLog {
                gamma_h: pick_h(match existing {
                    TruncationKind::OneSidedLog { gamma_h } => gamma_h,
                    _ => truncation::DEFAULT_GAMMA_H,
                }),
            },
            other => {
                return Err(CliError::usage(format!(
                    "unknown truncation `{other}` (expected none|mean-residual|median-residual|one-sided-log)"
                )))
            }
        };

        let step_name = match &self.step {
            Some(s) => Some(s.as_str()),
            None if self.mu.is_some() => Some("fixed"),
            None if self.k0.is_some() || self.mu_max.is_some() => Some("heuristic"),
            None => None,
        };
        if let Some(step_name) = step_name {
            cfg.step = match step_name {
                "fixed" => {
                    let base = match cfg.step {
                        StepPolicy::Fixed { mu } => mu,
                        _ => 0.6,
                    };
                    StepPolicy::Fixed {
                        mu: self.mu.unwrap_or(base),
                    }
                }
                "heuristic" => {
                    let (k0_base, mu_max_base) = match cfg.step {
                        StepPolicy::Heuristic { k0, mu_max } => (k0, mu_max),
                        _ => (330.0, 0.2),
                    };
                    StepPolicy::Heuristic {
                        k0: self.k0.unwrap_or(k0_base),
                        mu_max: self.mu_max.unwrap_or(mu_max_base),
                    }
                }
                "backtracking" => {
                    let (sh, sl, m0) = match cfg.step {
                        StepPolicy::Backtracking { shrink, slope, mu0 } => (shrink, slope, mu0),
                        _ => (0.5, 1e-4, 1.0),
                    };
                    StepPolicy::Backtracking {
                        shrink: self.shrink.unwrap_or(sh),
                        slope: self.slope.unwrap_or(sl),
                        mu0: self.mu0.unwrap_or(m0),
                    }
                }
                other => {
                    return Err(CliError::usage(format!(
                        "unknown step policy `{other}` (expected fixed|heuristic|backtracking)"
                    )))
                }
            };
        }

        if let Some(init) = &self.init {
            cfg.init = match init.as_str() {
                "classical" => InitKind::Classical,
                "rkld" => InitKind::Rkld,
                other => {
                    return Err(CliError::usage(format!(
                        "unknown init `{other}` (expected classical|rkld)"
                    )))
                }
            };
        }
        if let Some(k) = self.max_iters {
            cfg.max_iters = k;
        }
        if let Some(t) = self.stop_tol {
            cfg.stop_tol = t;
        }
        if let Some(b) = self.normalize_step {
            cfg.normalize_step = b;
        }
        if let Some(b) = self.scale_grad_by_m {
            cfg.scale_grad_by_m = b;
        }
        if let Some(s) = self.init_scale {
            cfg.init_scale_override = Some(s);
        }
        cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok((name, cfg))
    }
}

/// Parse an experiment config file into a harness spec.
pub fn parse_experiment(text: &str) -> CliResult<ExperimentSpec> {
    let file: ExperimentFile =
        toml::from_str(text).map_err(|e| CliError::usage(format!("config parse error: {e}")))?;
    check_schema_version(file.schema_version)?;

    let model = parse_model_kind(&file.model.kind)?;
    let signal = parse_signal_kind(&file.signal.kind)?;
    let sweep = parse_sweep_var(&file.sweep.var)?;

    let mut algorithms = Vec::new();
    for entry in &file.run.algorithms {
        let (name, config) = match entry {
            AlgorithmEntry::Preset(p) => AlgorithmTable {
                preset: p.clone(),
                name: None,
                step: None,
                mu: None,
                k0: None,
                mu_max: None,
                mu0: None,
                shrink: None,
                slope: None,
                lambda: None,
                eps: None,
                truncation: None,
                gamma_e: None,
                gamma_ub: None,
                gamma_h: None,
                init: None,
                max_iters: None,
                stop_tol: None,
                normalize_step: None,
                scale_grad_by_m: None,
                init_scale: None,
            }
            .resolve()?,
            AlgorithmEntry::Custom(t) => t.resolve()?,
        };
        algorithms.push(AlgorithmSpec { name, config });
    }

    let mut spec = ExperimentSpec::new(model, file.model.n);
    spec.alpha = file.model.alpha;
    spec.patterns = file.model.patterns;
    spec.signal = signal;
    spec.fresh_signal_per_trial = file.signal.fresh_per_trial;
    spec.corruption = CorruptionSpec {
        sigma: file.corruption.sigma,
        theta: file.corruption.theta,
        rho: file.corruption.rho,
        signed_outliers: file.corruption.signed_outliers,
    };
    spec.sweep = sweep;
    spec.sweep_values = file.sweep.values.clone();
    spec.algorithms = algorithms;
    spec.trials = file.run.trials;
    spec.base_seed = file.run.base_seed;
    spec.max_iters = file.run.max_iters;
    if let Some(t) = file.run.success_threshold {
        spec.success_threshold = t;
    }
    if let Some(c) = file.run.error_cap {
        spec.error_cap = c;
    }
    spec.validate()
        .map_err(|e| CliError::usage(e.to_string()))?;
    Ok(spec)
}

/// Parse a solver config file into a named configuration.
pub fn parse_solver(text: &str) -> CliResult<(String, SolverConfig)> {
    let file: SolveFile =
        toml::from_str(text).map_err(|e| CliError::usage(format!("config parse error: {e}")))?;
    check_schema_version(file.schema_version)?;
    file.solver.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXPERIMENT: &str = r#"
schema_version = 1

[model]
kind = "gaussian"
n = 16

[sweep]
var = "alpha"
values = [4.0, 6.0]

[run]
algorithms = ["rkld-wf-gaussian", { preset = "wf-l2", name = "l2", mu_max = 0.3 }]
trials = 2
base_seed = 9
"#;

    #[test]
    fn parses_experiment() {
        let spec = parse_experiment(EXPERIMENT).unwrap();
        assert_eq!(spec.n, 16);
        assert_eq!(spec.sweep_values, vec![4.0, 6.0]);
        assert_eq!(spec.algorithms.len(), 2);
        assert_eq!(spec.algorithms[1].name, "l2");
        assert_eq!(
            spec.algorithms[1].config.step,
            StepPolicy::Heuristic {
                k0: 330.0,
                mu_max: 0.3
            }
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = EXPERIMENT.replace("base_seed = 9", "base_seed = 9\nbogus = 1");
        assert!(parse_experiment(&bad).is_err());
    }

    #[test]
    fn schema_version_checked() {
        let bad = EXPERIMENT.replace("schema_version = 1", "schema_version = 2");
        assert!(parse_experiment(&bad).is_err());
    }

    #[test]
    fn empty_algorithms_rejected() {
        let bad = EXPERIMENT.replace(
            "algorithms = [\"rkld-wf-gaussian\", { preset = \"wf-l2\", name = \"l2\", mu_max = 0.3 }]",
            "algorithms = []",
        );
        assert!(parse_experiment(&bad).is_err());
    }

    #[test]
    fn solver_file_overrides() {
        let text = r#"
schema_version = 1

[solver]
preset = "rkld-gtwf"
gamma_h = 2.0
max_iters = 77
"#;
        let (name, cfg) = parse_solver(text).unwrap();
        assert_eq!(name, "rkld-gtwf");
        assert_eq!(cfg.max_iters, 77);
        assert!(
            matches!(cfg.truncation, TruncationKind::OneSidedLog { gamma_h } if gamma_h == 2.0)
        );
    }

    #[test]
    fn lambda_on_non_rkld_rejected() {
        let text = r#"
schema_version = 1

[solver]
preset = "wf-l2"
lambda = 1e-6
"#;
        assert!(parse_solver(text).is_err());
    }
}
