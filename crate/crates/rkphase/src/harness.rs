//! Seeded Monte-Carlo experiment runner.
//!
//! An experiment fixes a sampling model and signal, sweeps one variable
//! (oversampling factor, pattern count, or a corruption level), and runs `S`
//! independent trials per sweep point for each configured algorithm. Every
//! trial's randomness derives from `mix_seed(base_seed, path)`, so results
//! are reproducible and independent of execution order and worker count;
//! all algorithms at a given (sweep point, trial) see the same instance.

use std::time::Instant;

use rayon::prelude::*;

use crate::core::{dist_up_to_phase, mix_seed, norm, CVector, RVector, Rng};
use crate::error::{invalid, Result};
use crate::metrics::{self, TrialRecord};
use crate::models::{
    corrupt, forward_intensity, sample_cdp, sample_gaussian, Corruption, CorruptionSpec,
    InstanceMeta, ModelKind, ProblemInstance,
};
use crate::solver::{self, SolverConfig};

// Stream tags for seed derivation.
const TAG_SIGNAL: u64 = 1;
const TAG_INSTANCE: u64 = 2;
const TAG_SOLVER: u64 = 3;

/// Ground-truth signal families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    /// Entries `x_r + i x_i` with `x_r, x_i ~ N(0, 1)`.
    ComplexGaussian,
    /// Real `N(0, 1)` entries, zero imaginary part.
    RealGaussian,
}

/// Draw a ground-truth signal.
pub fn signal_draw(kind: SignalKind, n: usize, rng: &mut Rng) -> CVector {
    match kind {
        SignalKind::ComplexGaussian => (0..n).map(|_| rng.complex_standard_normal()).collect(),
        SignalKind::RealGaussian => (0..n)
            .map(|_| num_complex::Complex64::new(rng.standard_normal(), 0.0))
            .collect(),
    }
}

/// Variable swept across the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Alpha,
    Patterns,
    Sigma,
    Theta,
    Rho,
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::Alpha => "alpha",
            SweepVar::Patterns => "patterns",
            SweepVar::Sigma => "sigma",
            SweepVar::Theta => "theta",
            SweepVar::Rho => "rho",
        }
    }
}

/// A named solver configuration entering the comparison.
#[derive(Debug, Clone)]
pub struct AlgorithmSpec {
    pub name: String,
    pub config: SolverConfig,
}

impl AlgorithmSpec {
    /// Algorithm from a preset name.
    pub fn preset(name: &str) -> Result<Self> {
        Ok(AlgorithmSpec {
            name: name.to_string(),
            config: solver::preset(name)?,
        })
    }
}

/// Monte-Carlo sweep description.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub model: ModelKind,
    /// Signal dimension N.
    pub n: usize,
    /// Oversampling factor M/N for the Gaussian model (unless swept).
    pub alpha: f64,
    /// Pattern count L for the CDP model (unless swept).
    pub patterns: usize,
    pub signal: SignalKind,
    /// Redraw the ground truth per trial instead of fixing it per experiment.
    pub fresh_signal_per_trial: bool,
    pub corruption: CorruptionSpec,
    pub sweep: SweepVar,
    pub sweep_values: Vec<f64>,
    pub algorithms: Vec<AlgorithmSpec>,
    /// Trials per sweep point, S.
    pub trials: usize,
    pub base_seed: u64,
    /// Iteration budget override applied to every algorithm.
    pub max_iters: Option<usize>,
    /// Success threshold on the phase-aligned distance.
    pub success_threshold: f64,
    /// Relative errors entering ARE are capped here for aggregation
    /// stability on failed trials.
    pub error_cap: f64,
}

impl ExperimentSpec {
    pub fn new(model: ModelKind, n: usize) -> Self {
        ExperimentSpec {
            model,
            n,
            alpha: 6.0,
            patterns: 8,
            signal: SignalKind::ComplexGaussian,
            fresh_signal_per_trial: false,
            corruption: CorruptionSpec::clean(),
            sweep: SweepVar::Alpha,
            sweep_values: vec![6.0],
            algorithms: Vec::new(),
            trials: 1,
            base_seed: 0,
            max_iters: None,
            success_threshold: metrics::SUCCESS_DIST_THRESHOLD,
            error_cap: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("experiment: n must be >= 1"));
        }
        if self.trials == 0 {
            return Err(invalid("experiment: trials must be >= 1"));
        }
        if self.sweep_values.is_empty() {
            return Err(invalid("experiment: sweep_values must be non-empty"));
        }
        if self.algorithms.is_empty() {
            return Err(invalid("experiment: algorithms must be non-empty"));
        }
        let mut names: Vec<&str> = self.algorithms.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.algorithms.len() {
            return Err(invalid("experiment: algorithm names must be unique"));
        }
        for a in &self.algorithms {
            a.config.validate()?;
        }
        self.corruption.validate()?;
        for &v in &self.sweep_values {
            match self.sweep {
                SweepVar::Alpha => {
                    if !(v > 0.0) {
                        return Err(invalid("experiment: alpha values must be positive"));
                    }
                }
                SweepVar::Patterns => {
                    if !(v >= 1.0) || v.fract() != 0.0 {
                        return Err(invalid("experiment: pattern counts must be integers >= 1"));
                    }
                }
                SweepVar::Sigma | SweepVar::Theta => {
                    if !(v >= 0.0) {
                        return Err(invalid("experiment: corruption levels must be >= 0"));
                    }
                }
                SweepVar::Rho => {
                    if !(0.0..1.0).contains(&v) {
                        return Err(invalid("experiment: rho values must lie in [0, 1)"));
                    }
                }
            }
        }
        if !(self.alpha > 0.0) {
            return Err(invalid("experiment: alpha must be positive"));
        }
        if self.patterns == 0 {
            return Err(invalid("experiment: patterns must be >= 1"));
        }
        Ok(())
    }

    /// Resolved (alpha, patterns, corruption) at a sweep value.
    fn at(&self, value: f64) -> (f64, usize, CorruptionSpec) {
        let mut alpha = self.alpha;
        let mut patterns = self.patterns;
        let mut corruption = self.corruption;
        match self.sweep {
            SweepVar::Alpha => alpha = value,
            SweepVar::Patterns => patterns = value as usize,
            SweepVar::Sigma => corruption.sigma = value,
            SweepVar::Theta => corruption.theta = value,
            SweepVar::Rho => corruption.rho = value,
        }
        (alpha, patterns, corruption)
    }
}

/// Instance plus injected-corruption diagnostics.
#[derive(Debug, Clone)]
pub struct GeneratedProblem {
    pub instance: ProblemInstance,
    pub y_clean: RVector,
    pub corruption: Corruption,
}

/// Build one seeded problem instance. The operator and corruption streams
/// are derived independently from `seed`, so instances with the same seed
/// and model agree regardless of corruption levels.
pub fn generate_problem(
    model: ModelKind,
    n: usize,
    alpha: f64,
    patterns: usize,
    corruption_spec: &CorruptionSpec,
    x: &CVector,
    seed: u64,
) -> Result<GeneratedProblem> {
    let mut op_rng = Rng::seed_from_u64(mix_seed(seed, &[1]));
    let op = match model {
        ModelKind::Gaussian => {
            let m = (alpha * n as f64).round().max(1.0) as usize;
            sample_gaussian(m, n, &mut op_rng)?
        }
        ModelKind::Cdp => sample_cdp(n, patterns, &mut op_rng)?,
    };
    let y_clean = forward_intensity(&op, x)?;
    let xns = norm(x) * norm(x);
    let mut corr_rng = Rng::seed_from_u64(mix_seed(seed, &[2]));
    let corruption = corrupt(&y_clean, xns, corruption_spec, &mut corr_rng)?;
    let instance = ProblemInstance {
        op,
        y: corruption.y.clone(),
        x_true: Some(x.clone()),
        meta: InstanceMeta {
            model,
            corruption: *corruption_spec,
            seed,
        },
    };
    Ok(GeneratedProblem {
        instance,
        y_clean,
        corruption,
    })
}

/// Per-(algorithm, sweep point) aggregate row.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub algorithm: String,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub trials: usize,
    pub are: f64,
    pub success_prob: f64,
}

/// Flat trial rows plus aggregates.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub sweep_var: String,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
    pub success_threshold: f64,
    pub error_cap: f64,
}

/// Recompute aggregates from trial rows; groups by (algorithm, sweep value)
/// in order of first appearance. Non-finite relative errors count as the cap.
pub fn aggregate(
    records: &[TrialRecord],
    sweep_var: &str,
    success_threshold: f64,
    error_cap: f64,
) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in records {
        let key = (r.algorithm.clone(), r.sweep_value);
        if !keys
            .iter()
            .any(|(a, v)| *a == key.0 && v.to_bits() == key.1.to_bits())
        {
            keys.push(key);
        }
    }
    keys.iter()
        .map(|(alg, value)| {
            let group: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.algorithm == *alg && r.sweep_value.to_bits() == value.to_bits())
                .collect();
            let s = group.len();
            let are = group
                .iter()
                .map(|r| {
                    if r.rel_err.is_finite() {
                        r.rel_err.min(error_cap)
                    } else {
                        error_cap
                    }
                })
                .sum::<f64>()
                / s as f64;
            let hits = group.iter().filter(|r| r.dist < success_threshold).count();
            AggregateRow {
                algorithm: alg.clone(),
                sweep_var: sweep_var.to_string(),
                sweep_value: *value,
                trials: s,
                are,
                success_prob: hits as f64 / s as f64,
            }
        })
        .collect()
}

/// Run the full sweep. Trials execute in parallel on the current rayon
/// pool; output is deterministic for a given spec regardless of thread
/// count (wall-clock fields aside).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;

    let fixed_x = if spec.fresh_signal_per_trial {
        None
    } else {
        let mut rng = Rng::seed_from_u64(mix_seed(spec.base_seed, &[TAG_SIGNAL]));
        Some(signal_draw(spec.signal, spec.n, &mut rng))
    };

    let tasks: Vec<(usize, usize)> = (0..spec.sweep_values.len())
        .flat_map(|s| (0..spec.trials).map(move |t| (s, t)))
        .collect();

    type KeyedRow = (usize, usize, usize, TrialRecord);
    let nested: Vec<Result<Vec<KeyedRow>>> = tasks
        .par_iter()
        .map(|&(sweep_idx, trial)| {
            let value = spec.sweep_values[sweep_idx];
            let (alpha, patterns, corruption) = spec.at(value);
            let x = match &fixed_x {
                Some(x) => x.clone(),
                None => {
                    let mut rng = Rng::seed_from_u64(mix_seed(
                        spec.base_seed,
                        &[sweep_idx as u64, trial as u64, TAG_SIGNAL],
                    ));
                    signal_draw(spec.signal, spec.n, &mut rng)
                }
            };
            let instance_seed = mix_seed(
                spec.base_seed,
                &[sweep_idx as u64, trial as u64, TAG_INSTANCE],
            );
            let generated = generate_problem(
                spec.model,
                spec.n,
                alpha,
                patterns,
                &corruption,
                &x,
                instance_seed,
            )?;

            let mut rows = Vec::with_capacity(spec.algorithms.len());
            for (alg_idx, alg) in spec.algorithms.iter().enumerate() {
                let mut config = alg.config.clone();
                if let Some(k) = spec.max_iters {
                    config.max_iters = k;
                }
                let solver_seed = mix_seed(
                    spec.base_seed,
                    &[sweep_idx as u64, trial as u64, alg_idx as u64, TAG_SOLVER],
                );
                let mut rng = Rng::seed_from_u64(solver_seed);
                let started = Instant::now();
                // A failed run (degenerate init, invalid shapes) is recorded
                // as a failed row rather than crashing the sweep.
                let row = match solver::run(&generated.instance, &config, &mut rng) {
                    Ok(result) => {
                        let dist = dist_up_to_phase(&x, &result.z_final).unwrap_or(f64::NAN);
                        let rel = dist / norm(&x);
                        TrialRecord {
                            seed: instance_seed,
                            sweep_value: value,
                            algorithm: alg.name.clone(),
                            trial,
                            rel_err: rel,
                            dist,
                            iterations: result.iterations_used,
                            success: dist < spec.success_threshold,
                            wall_ms: started.elapsed().as_secs_f64() * 1e3,
                        }
                    }
                    Err(_) => TrialRecord {
                        seed: instance_seed,
                        sweep_value: value,
                        algorithm: alg.name.clone(),
                        trial,
                        rel_err: f64::NAN,
                        dist: f64::NAN,
                        iterations: 0,
                        success: false,
                        wall_ms: started.elapsed().as_secs_f64() * 1e3,
                    },
                };
                rows.push((alg_idx, sweep_idx, trial, row));
            }
            Ok(rows)
        })
        .collect();

    let mut keyed = Vec::with_capacity(tasks.len() * spec.algorithms.len());
    for group in nested {
        keyed.extend(group?);
    }
    keyed.sort_by_key(|r| (r.0, r.1, r.2));
    let records: Vec<TrialRecord> = keyed.into_iter().map(|(_, _, _, r)| r).collect();

    let aggregates = aggregate(
        &records,
        spec.sweep.name(),
        spec.success_threshold,
        spec.error_cap,
    );
    Ok(ResultTable {
        sweep_var: spec.sweep.name().to_string(),
        records,
        aggregates,
        success_threshold: spec.success_threshold,
        error_cap: spec.error_cap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(ModelKind::Gaussian, 12);
        spec.sweep_values = vec![5.0, 7.0];
        spec.trials = 3;
        spec.base_seed = 42;
        spec.max_iters = Some(60);
        spec.algorithms = vec![
            AlgorithmSpec::preset("rkld-wf-gaussian").unwrap(),
            AlgorithmSpec::preset("wf-l2").unwrap(),
        ];
        spec
    }

    #[test]
    fn signal_draw_properties() {
        let mut rng = Rng::seed_from_u64(1);
        let real = signal_draw(SignalKind::RealGaussian, 50, &mut rng);
        assert!(real.iter().all(|c| c.im == 0.0));

        let mut r1 = Rng::seed_from_u64(2);
        let mut r2 = Rng::seed_from_u64(2);
        let a = signal_draw(SignalKind::ComplexGaussian, 20, &mut r1);
        let b = signal_draw(SignalKind::ComplexGaussian, 20, &mut r2);
        assert_eq!(a, b);

        let mut rng = Rng::seed_from_u64(3);
        let big = signal_draw(SignalKind::ComplexGaussian, 10_000, &mut rng);
        let var_re = big.iter().map(|c| c.re * c.re).sum::<f64>() / 10_000.0;
        assert!((var_re - 1.0).abs() < 0.05);
    }

    #[test]
    fn single_trial_table_shape() {
        let mut spec = small_spec();
        spec.sweep_values = vec![6.0];
        spec.trials = 1;
        let t = run_experiment(&spec).unwrap();
        assert_eq!(t.records.len(), 2);
        assert_eq!(t.aggregates.len(), 2);
    }

    #[test]
    fn repeat_runs_identical_modulo_wall() {
        let spec = small_spec();
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(b.records.iter()) {
            assert_eq!(ra.seed, rb.seed);
            assert_eq!(ra.algorithm, rb.algorithm);
            assert_eq!(ra.trial, rb.trial);
            assert_eq!(ra.rel_err.to_bits(), rb.rel_err.to_bits());
            assert_eq!(ra.dist.to_bits(), rb.dist.to_bits());
            assert_eq!(ra.iterations, rb.iterations);
            assert_eq!(ra.success, rb.success);
        }
        assert_eq!(a.aggregates, b.aggregates);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let spec = small_spec();
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = pool1.install(|| run_experiment(&spec)).unwrap();
        let b = pool4.install(|| run_experiment(&spec)).unwrap();
        for (ra, rb) in a.records.iter().zip(b.records.iter()) {
            assert_eq!(ra.rel_err.to_bits(), rb.rel_err.to_bits());
            assert_eq!(ra.seed, rb.seed);
        }
        assert_eq!(a.aggregates, b.aggregates);
    }

    #[test]
    fn per_trial_seeds_distinct() {
        let spec = small_spec();
        let t = run_experiment(&spec).unwrap();
        let mut seeds: Vec<u64> = t.records.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        // One instance seed per (sweep, trial) shared by both algorithms.
        assert_eq!(seeds.len(), spec.sweep_values.len() * spec.trials);
    }

    #[test]
    fn aggregates_match_metrics_recompute() {
        let spec = small_spec();
        let t = run_experiment(&spec).unwrap();
        let recomputed = aggregate(&t.records, &t.sweep_var, t.success_threshold, t.error_cap);
        assert_eq!(t.aggregates, recomputed);

        for row in &t.aggregates {
            let group: Vec<TrialRecord> = t
                .records
                .iter()
                .filter(|r| r.algorithm == row.algorithm && r.sweep_value == row.sweep_value)
                .cloned()
                .collect();
            let capped: Vec<TrialRecord> = group
                .iter()
                .map(|r| {
                    let mut c = r.clone();
                    c.rel_err = if c.rel_err.is_finite() {
                        c.rel_err.min(t.error_cap)
                    } else {
                        t.error_cap
                    };
                    c
                })
                .collect();
            assert_abs_diff_eq!(row.are, metrics::are(&capped).unwrap(), epsilon = 1e-15);
            assert_abs_diff_eq!(
                row.success_prob,
                metrics::success_probability(&group, t.success_threshold).unwrap(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn fixed_signal_shared_across_trials() {
        // Same (sweep, trial) instance seeds for both algorithms imply a
        // shared instance; additionally the ground truth is drawn once.
        let mut spec = small_spec();
        spec.trials = 2;
        let t = run_experiment(&spec).unwrap();
        // Instance seeds repeat per algorithm but not across trials.
        let rk: Vec<&TrialRecord> = t
            .records
            .iter()
            .filter(|r| r.algorithm == "rkld-wf-gaussian")
            .collect();
        let l2: Vec<&TrialRecord> = t
            .records
            .iter()
            .filter(|r| r.algorithm == "wf-l2")
            .collect();
        assert_eq!(rk.len(), l2.len());
        for (a, b) in rk.iter().zip(l2.iter()) {
            assert_eq!(a.seed, b.seed);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = small_spec();
        spec.algorithms.clear();
        assert!(run_experiment(&spec).is_err());

        let mut spec = small_spec();
        spec.sweep_values.clear();
        assert!(run_experiment(&spec).is_err());

        let mut spec = small_spec();
        spec.sweep = SweepVar::Patterns;
        spec.sweep_values = vec![2.5];
        assert!(run_experiment(&spec).is_err());

        let mut spec = small_spec();
        spec.algorithms = vec![
            AlgorithmSpec::preset("rkld-wf-gaussian").unwrap(),
            AlgorithmSpec::preset("rkld-wf-gaussian").unwrap(),
        ];
        assert!(run_experiment(&spec).is_err());
    }

    #[test]
    fn diverging_trials_become_failed_rows() {
        // An absurd step makes every run trip the divergence guard; the
        // sweep still completes, rows are marked unsuccessful, and their
        // errors enter the aggregates at the cap.
        let mut spec = small_spec();
        spec.sweep_values = vec![6.0];
        spec.trials = 3;
        let mut broken = AlgorithmSpec::preset("rkld-wf-gaussian").unwrap();
        broken.name = "broken".into();
        broken.config.step = crate::solver::StepPolicy::Fixed { mu: 1e12 };
        spec.algorithms = vec![broken];

        let t = run_experiment(&spec).unwrap();
        assert_eq!(t.records.len(), 3);
        assert!(t.records.iter().all(|r| !r.success));
        let agg = &t.aggregates[0];
        assert!(
            agg.are >= 1.0,
            "diverged trials should dominate the capped ARE, got {}",
            agg.are
        );
        assert_eq!(agg.success_prob, 0.0);
    }
}
