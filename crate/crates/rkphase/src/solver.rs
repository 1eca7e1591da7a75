//! Gradient-descent driver: initialization, optional per-iteration
//! truncation, step policy, stopping rules, and the named presets.

use std::fmt;

use crate::core::{norm, CVector, EigOptions, Rng};
use crate::error::{invalid, Error, Result};
use crate::init;
use crate::losses::{self, LossKind};
use crate::models::{Operator, ProblemInstance};
use crate::truncation::{self, TruncationKind};

/// Step-size schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    /// Constant step.
    Fixed { mu: f64 },
    /// `mu_k = min(1 - exp(-(k+1)/k0), mu_max)`; the slow ramp the
    /// intensity-l2 and Poisson flows need to stay in the basin early on.
    Heuristic { k0: f64, mu_max: f64 },
    /// Armijo backtracking line search from `mu0`, shrink factor `shrink`,
    /// slope fraction `slope`.
    Backtracking { shrink: f64, slope: f64, mu0: f64 },
}

impl StepPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepPolicy::Fixed { mu } => mu > 0.0,
            StepPolicy::Heuristic { k0, mu_max } => k0 > 0.0 && mu_max > 0.0,
            StepPolicy::Backtracking { shrink, slope, mu0 } => {
                (0.0..1.0).contains(&shrink)
                    && shrink > 0.0
                    && (0.0..1.0).contains(&slope)
                    && slope > 0.0
                    && mu0 > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("invalid step policy parameters"))
        }
    }

    pub fn backtracking_default() -> Self {
        StepPolicy::Backtracking {
            shrink: 0.5,
            slope: 1e-4,
            mu0: 1.0,
        }
    }
}

/// Initial-estimate source.
#[derive(Debug, Clone)]
pub enum InitKind {
    Classical,
    Rkld,
    Provided(CVector),
}

/// Full solver configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub loss: LossKind,
    pub truncation: TruncationKind,
    pub step: StepPolicy,
    /// Iteration budget K.
    pub max_iters: usize,
    /// Stop when `||z_{k+1} - z_k|| < stop_tol`.
    pub stop_tol: f64,
    pub init: InitKind,
    /// Scale gradients by 1/M for loss kinds whose formula does not already
    /// carry the factor (the reverse-KL loss).
    pub scale_grad_by_m: bool,
    /// Divide steps by `||z0||^2` (the classic intensity-l2 flow convention;
    /// inappropriate for losses whose gradients are scale-free).
    pub normalize_step: bool,
    /// Override the spectral initializer's norm estimate.
    pub init_scale_override: Option<f64>,
    /// Power-iteration budget for spectral initialization.
    pub eig: EigOptions,
    /// Abort when the loss exceeds this multiple of its initial value.
    pub divergence_guard: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            loss: LossKind::rkld(),
            truncation: TruncationKind::None,
            step: StepPolicy::Fixed { mu: 0.6 },
            max_iters: 500,
            // Update-norm stop rule; tight enough that exact-recovery runs
            // reach the floating-point floor rather than stopping at a
            // measurable residual error.
            stop_tol: 1e-12,
            init: InitKind::Rkld,
            scale_grad_by_m: true,
            normalize_step: false,
            init_scale_override: None,
            eig: EigOptions::default(),
            divergence_guard: 1e6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        self.truncation.validate()?;
        self.step.validate()?;
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be >= 1"));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(invalid("stop_tol must be >= 0"));
        }
        Ok(())
    }
}

/// Why a run aborted before its budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortReason {
    NonFiniteLoss,
    NonFiniteGradient,
    Diverged,
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::NonFiniteLoss => write!(f, "non-finite loss"),
            AbortReason::NonFiniteGradient => write!(f, "non-finite gradient"),
            AbortReason::Diverged => write!(f, "loss exceeded divergence guard"),
        }
    }
}

/// Abort diagnostics: iteration and (for non-finite gradients) the first
/// offending component index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbortInfo {
    pub iter: usize,
    pub index: Option<usize>,
    pub reason: AbortReason,
}

/// One trace row: the state after `iter` updates. Row 0 records the
/// initialization; `kept` and `step` describe the update that produced the
/// row's iterate (row 0 uses `kept = M`, `step = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub loss: f64,
    pub rel_err: Option<f64>,
    pub kept: usize,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub z_final: CVector,
    pub iterations_used: usize,
    /// True when the update-norm stopping rule fired within budget.
    pub converged: bool,
    pub trace: Vec<IterRecord>,
    pub abort: Option<AbortInfo>,
    /// Spectral initializer convergence (true for provided starts).
    pub init_converged: bool,
}

fn first_non_finite(v: &CVector) -> Option<usize> {
    v.iter()
        .position(|c| !(c.re.is_finite() && c.im.is_finite()))
}

fn initial_estimate(
    problem: &ProblemInstance,
    config: &SolverConfig,
    rng: &mut Rng,
) -> Result<(CVector, bool)> {
    match &config.init {
        InitKind::Provided(z0) => {
            if z0.len() != problem.op.cols() {
                return Err(Error::LengthMismatch {
                    left: z0.len(),
                    right: problem.op.cols(),
                });
            }
            Ok((z0.clone(), true))
        }
        InitKind::Classical => {
            let w = init::classical_weights(&problem.y);
            let s = init::spectral_estimate(
                &w,
                &problem.op,
                &problem.y,
                &config.eig,
                config.init_scale_override,
                rng,
            )?;
            Ok((s.z0, s.converged))
        }
        InitKind::Rkld => {
            let w = init::rkld_weights(&problem.y, &problem.op)?;
            let s = init::spectral_estimate(
                &w,
                &problem.op,
                &problem.y,
                &config.eig,
                config.init_scale_override,
                rng,
            )?;
            Ok((s.z0, s.converged))
        }
    }
}

/// Run gradient descent on `problem` under `config`.
///
/// Deterministic given (problem, config, rng seed). Aborts (non-finite
/// values, divergence guard) are reported in the result, not as errors.
pub fn run(
    problem: &ProblemInstance,
    config: &SolverConfig,
    rng: &mut Rng,
) -> Result<SolverResult> {
    config.validate()?;
    problem.validate()?;
    let op = &problem.op;
    let y = &problem.y;
    let m_rows = op.rows();

    let (z0, init_converged) = initial_estimate(problem, config, rng)?;
    let step_scale = if config.normalize_step {
        let n0 = norm(&z0);
        if n0 > 0.0 {
            1.0 / (n0 * n0)
        } else {
            1.0
        }
    } else {
        1.0
    };
    let grad_scale = if config.scale_grad_by_m && !config.loss.grad_is_m_normalized() {
        1.0 / m_rows as f64
    } else {
        1.0
    };

    let rel = |z: &CVector| -> Option<f64> {
        problem
            .x_true
            .as_ref()
            .and_then(|x| crate::core::relative_error(x, z).ok())
    };

    let mut z = z0;
    let mut trace: Vec<IterRecord> = Vec::with_capacity(config.max_iters + 1);
    let mut pending: Option<(usize, f64)> = None; // (kept, step) of last update
    let mut guard_base: Option<f64> = None;
    let mut abort: Option<AbortInfo> = None;
    let mut converged = false;
    let mut k = 0usize;

    loop {
        let az = op.apply(&z);
        let q = az.mapv(|c| c.norm_sqr());
        let full_loss = losses::value_from_intensities(&config.loss, &q, y)?;
        let (kept, step) = pending.unwrap_or((m_rows, 0.0));
        trace.push(IterRecord {
            iter: k,
            loss: full_loss,
            rel_err: rel(&z),
            kept,
            step,
        });

        if !full_loss.is_finite() {
            abort = Some(AbortInfo {
                iter: k,
                index: q.iter().position(|v| !v.is_finite()),
                reason: AbortReason::NonFiniteLoss,
            });
            break;
        }
        match guard_base {
            None => guard_base = Some(full_loss),
            Some(f0) => {
                if full_loss > config.divergence_guard * f0.max(f64::MIN_POSITIVE) {
                    abort = Some(AbortInfo {
                        iter: k,
                        index: None,
                        reason: AbortReason::Diverged,
                    });
                    break;
                }
            }
        }
        if converged || k >= config.max_iters {
            break;
        }

        // Mask on the current iterate, then the zero-weighted gradient.
        let mask = truncation::build_mask(&config.truncation, &z, op, y)?;
        let (grad, masked_value, kept_count) = match &mask {
            None => {
                let w = losses::gradient_weights(&config.loss, &az, y)?;
                (op.adjoint_apply(&w), full_loss, m_rows)
            }
            Some(mask) => {
                let (mop, my) = truncation::apply_mask(op, y, mask)?;
                let maz = mop.apply(&z);
                let mq = maz.mapv(|c| c.norm_sqr());
                let mv = losses::value_from_intensities(&config.loss, &mq, &my)?;
                let w = losses::gradient_weights(&config.loss, &maz, &my)?;
                (op.adjoint_apply(&w), mv, mask.kept_count())
            }
        };
        let grad = grad.mapv(|c| c * grad_scale);
        if let Some(idx) = first_non_finite(&grad) {
            abort = Some(AbortInfo {
                iter: k,
                index: Some(idx),
                reason: AbortReason::NonFiniteGradient,
            });
            break;
        }

        let (z_next, step_used) = match config.step {
            StepPolicy::Fixed { mu } => {
                let s = mu * step_scale;
                (&z - &grad.mapv(|c| c * s), s)
            }
            StepPolicy::Heuristic { k0, mu_max } => {
                let mu = (1.0 - (-((k + 1) as f64) / k0).exp()).min(mu_max);
                let s = mu * step_scale;
                (&z - &grad.mapv(|c| c * s), s)
            }
            StepPolicy::Backtracking { shrink, slope, mu0 } => {
                let gsq = grad.iter().map(|c| c.norm_sqr()).sum::<f64>();
                let bt_y = match &mask {
                    None => y.clone(),
                    Some(mask) => truncation::apply_mask(op, y, mask)?.1,
                };
                let cand_value = |cand: &CVector| -> Result<f64> {
                    let mut azc = op.apply(cand);
                    if let Some(mask) = &mask {
                        for (m, v) in azc.iter_mut().enumerate() {
                            if !mask.is_kept(m) {
                                *v = num_complex::Complex64::new(0.0, 0.0);
                            }
                        }
                    }
                    let cq = azc.mapv(|c| c.norm_sqr());
                    losses::value_from_intensities(&config.loss, &cq, &bt_y)
                };
                let mut mu = mu0 * step_scale;
                let mut accepted = None;
                for _ in 0..60 {
                    let cand = &z - &grad.mapv(|c| c * mu);
                    let cv = cand_value(&cand)?;
                    if cv.is_finite() && cv <= masked_value - slope * mu * gsq {
                        accepted = Some((cand, mu));
                        break;
                    }
                    mu *= shrink;
                }
                match accepted {
                    Some(a) => a,
                    // No decrease found at the smallest step: numerically
                    // stationary, stop here.
                    None => {
                        converged = true;
                        (z.clone(), 0.0)
                    }
                }
            }
        };

        let update_norm = {
            let mut s = 0.0;
            for (a, b) in z_next.iter().zip(z.iter()) {
                s += (a - b).norm_sqr();
            }
            s.sqrt()
        };
        if update_norm < config.stop_tol {
            converged = true;
        }
        pending = Some((kept_count, step_used));
        z = z_next;
        k += 1;
    }

    Ok(SolverResult {
        z_final: z,
        iterations_used: k,
        converged,
        trace,
        abort,
        init_converged,
    })
}

/// Named parameter presets.
///
/// `rkld-wf-gaussian` / `rkld-wf-cdp` are the plain reverse-KL flows with
/// fixed steps 0.6 / 0.4; `rkld-mtwf` / `rkld-gtwf` add median-residual and
/// one-sided-log truncation. `wf-l2` / `wf-poisson` are the classical flows
/// with the ramped step `min(1 - e^{-k/330}, 0.2)`; `rwf` is the reshaped
/// amplitude flow; `median-twf` / `median-rwf` pair the median mask with
/// the Poisson and reshaped losses.
pub fn preset(name: &str) -> Result<SolverConfig> {
    let base = SolverConfig::default();
    let cfg = match name {
        "rkld-wf-gaussian" => SolverConfig {
            step: StepPolicy::Fixed { mu: 0.6 },
            ..base
        },
        "rkld-wf-cdp" => SolverConfig {
            step: StepPolicy::Fixed { mu: 0.4 },
            ..base
        },
        "rkld-mtwf" => SolverConfig {
            truncation: TruncationKind::median(),
            step: StepPolicy::Fixed { mu: 0.6 },
            max_iters: 1000,
            ..base
        },
        "rkld-gtwf" => SolverConfig {
            truncation: TruncationKind::one_sided_log(),
            step: StepPolicy::Fixed { mu: 0.6 },
            max_iters: 1000,
            ..base
        },
        "wf-l2" => SolverConfig {
            loss: LossKind::IntensityL2,
            step: StepPolicy::Heuristic {
                k0: 330.0,
                mu_max: 0.2,
            },
            init: InitKind::Classical,
            normalize_step: true,
            max_iters: 1000,
            ..base
        },
        "wf-poisson" => SolverConfig {
            loss: LossKind::poisson(),
            step: StepPolicy::Heuristic {
                k0: 330.0,
                mu_max: 0.2,
            },
            init: InitKind::Classical,
            max_iters: 1000,
            ..base
        },
        // The amplitude-loss gradient here is half the conventional
        // amplitude-flow one (exact derivative of the 1/2M value), so the
        // classic step 0.8 becomes 1.6.
        "rwf" => SolverConfig {
            loss: LossKind::ReshapedL2,
            step: StepPolicy::Fixed { mu: 1.6 },
            init: InitKind::Classical,
            max_iters: 1000,
            ..base
        },
        "median-twf" => SolverConfig {
            loss: LossKind::poisson(),
            truncation: TruncationKind::median(),
            step: StepPolicy::Heuristic {
                k0: 330.0,
                mu_max: 0.2,
            },
            init: InitKind::Classical,
            max_iters: 1000,
            ..base
        },
        "median-rwf" => SolverConfig {
            loss: LossKind::ReshapedL2,
            truncation: TruncationKind::median(),
            step: StepPolicy::Fixed { mu: 1.6 },
            init: InitKind::Classical,
            max_iters: 1000,
            ..base
        },
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(cfg)
}

pub const PRESET_NAMES: &[&str] = &[
    "rkld-wf-gaussian",
    "rkld-wf-cdp",
    "rkld-mtwf",
    "rkld-gtwf",
    "wf-l2",
    "wf-poisson",
    "rwf",
    "median-twf",
    "median-rwf",
];
