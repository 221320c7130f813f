//! The outer loop: alternate initial phases with rescalings until a
//! feasible point appears or the phase budget runs out.

use crate::error::{Error, Result};
use crate::instance::{
    normalize_rows, pull_back, Certificate, CertificateDocument, ConeInstance, ExhaustionSummary, StepDocument,
    TransformLog,
};
use crate::linalg::{dot, norm2};
use crate::norm::{NormDocument, NormState};
use crate::phases::{default_max_iters, run_phase, PhaseConfig, PhaseMode, PhaseResult, PhaseStats};
use crate::rescale::{
    derandomized_direction, gaussian_subset_direction, multirank_rescale, norm_update, rank1_rescale, RescaleKind,
    RescaleReport, ALPHA_CAP,
};
use crate::rng;
use crate::scalar::Scalar;
use crate::trace::TraceRecord;
use serde::{Deserialize, Serialize};

/// Phase budget multiplier applied to `n ln(1/rho)`.
pub const BUDGET_CONSTANT: f64 = 8.0;
/// Phase budget when no `rho` hint is available.
pub const DEFAULT_MAX_PHASES: usize = 10_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveConfig {
    pub phase_mode: PhaseMode,
    pub rescale_mode: RescaleKind,
    pub rho_hint: Option<f64>,
    /// Explicit phase budget; overrides the `rho` hint.
    pub max_phases: Option<usize>,
    pub seed: u64,
    /// `ln Φ` below which an MWU phase stops (0, or -1 for rounding).
    pub termination_phi_log: f64,
    /// Use the deterministic thin-direction search for rank-1 rescales.
    pub derandomize: bool,
    pub alpha_cap: f64,
    pub log_exponent_a: f64,
    /// Per-phase iteration cap; defaults to a multiple of the mode's bound.
    pub max_iters_per_phase: Option<usize>,
    pub record_trace: bool,
    /// Standard gradient descent with the fixed step `1/(2n)`; under
    /// [`john_ellipsoid`] the final phase also runs until `Φ < 1/m`.
    #[serde(default)]
    pub fixed_step_rounding: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            phase_mode: PhaseMode::MwuModified,
            rescale_mode: RescaleKind::MultiRank,
            rho_hint: None,
            max_phases: None,
            seed: 0,
            termination_phi_log: 0.0,
            derandomize: false,
            alpha_cap: ALPHA_CAP,
            log_exponent_a: 1.0,
            max_iters_per_phase: None,
            record_trace: true,
            fixed_step_rounding: false,
        }
    }
}

impl SolveConfig {
    pub fn new(phase_mode: PhaseMode, rescale_mode: RescaleKind) -> Self {
        Self { phase_mode, rescale_mode, ..Self::default() }
    }

    /// `⌈8 n ln(1/rho)⌉` with a `rho` hint, otherwise 10⁴, unless given
    /// explicitly.
    pub fn phase_budget(&self, n: usize) -> usize {
        if let Some(p) = self.max_phases {
            return p;
        }
        match self.rho_hint {
            Some(rho) if rho > 0.0 && rho < 1.0 => {
                ((BUDGET_CONSTANT * n as f64 * (1.0 / rho).ln()).ceil() as usize).max(1)
            }
            _ => DEFAULT_MAX_PHASES,
        }
    }

    /// Evidence threshold handed to each phase: `1/(12 n sqrt π)` for rank-1
    /// (`1/(60 n)` with the deterministic direction, whose norm guarantee is
    /// weaker), `1/(10 n)` otherwise.
    pub fn delta(&self, n: usize) -> f64 {
        let n = n as f64;
        match (self.rescale_mode, self.derandomize) {
            (RescaleKind::Rank1, false) => 1.0 / (12.0 * n * std::f64::consts::PI.sqrt()),
            (RescaleKind::Rank1, true) => 1.0 / (60.0 * n),
            _ => 1.0 / (10.0 * n),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_phases == Some(0) {
            return Err(Error::Config("max_phases must be at least 1".into()));
        }
        if let Some(r) = self.rho_hint {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Config(format!("rho hint must lie in (0, 1), got {r}")));
            }
        }
        if self.phase_mode == PhaseMode::ClassicalPerceptron && self.rescale_mode == RescaleKind::NormUpdate {
            return Err(Error::Config("the classical perceptron cannot run under an evolving norm".into()));
        }
        if !(self.alpha_cap >= 1.0) {
            return Err(Error::Config(format!("alpha cap must be at least 1, got {}", self.alpha_cap)));
        }
        if self.termination_phi_log > 0.0 {
            return Err(Error::Config("termination threshold on ln Φ must be <= 0".into()));
        }
        if self.fixed_step_rounding && self.phase_mode != PhaseMode::MwuStandard {
            return Err(Error::Config("the fixed-step variant runs standard gradient descent (--phase mwu)".into()));
        }
        Ok(())
    }

    /// Step of the fixed-step variant.
    pub fn fixed_step(&self, n: usize) -> Option<f64> {
        self.fixed_step_rounding.then(|| 1.0 / (2.0 * n as f64))
    }
}

/// Inner/outer ball data of the final cone: `B(z, 1/T) ⊆ P ∩ B ⊆ B(z, 1 + ‖z‖)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Roundedness {
    pub center: Vec<f64>,
    /// Iterations of the final phase.
    pub t: usize,
    pub inner_radius: f64,
    pub outer_radius_bound: f64,
    /// `outer / inner = (1 + ‖z‖) T`
    pub ratio: f64,
    pub check_passed: bool,
}

#[derive(Clone, Debug)]
pub struct SolveResult<T> {
    pub certificate: Certificate<T>,
    pub phases_used: usize,
    pub total_iterations: usize,
    pub rescales: usize,
    pub transform_log: TransformLog<T>,
    pub norm: NormState<T>,
    /// Rows of the last phase (working coordinates).
    pub final_instance: ConeInstance<T>,
    pub trace: Vec<TraceRecord>,
    pub phase_stats: Vec<PhaseStats>,
    pub phase_iterations: Vec<usize>,
    pub rescale_reports: Vec<RescaleReport>,
    pub roundedness: Option<Roundedness>,
    /// Iterate of the final phase in working coordinates.
    pub final_iterate: Option<Vec<T>>,
    pub delta: f64,
    pub budget: usize,
    /// `ln Φ` stopping threshold the phases actually used.
    pub termination_phi_log: f64,
    pub fixed_step: Option<f64>,
}

impl<T: Scalar> SolveResult<T> {
    pub fn det_growth_total(&self) -> f64 {
        self.rescale_reports.iter().map(|r| r.det_growth_log).sum()
    }

    pub fn to_document(&self, cfg: &SolveConfig) -> SolveDocument {
        SolveDocument {
            certificate: CertificateDocument {
                certificate: self.certificate.to_kind(),
                transform_log: self.transform_log.to_document(),
            },
            phases_used: self.phases_used,
            total_iterations: self.total_iterations,
            rescales: self.rescales,
            phase_iterations: self.phase_iterations.clone(),
            norm: if self.norm.is_identity() { None } else { Some(self.norm.to_document()) },
            roundedness: self.roundedness.clone(),
            constants: Constants {
                delta: self.delta,
                phase_budget: self.budget,
                alpha_cap: cfg.alpha_cap,
                log_exponent_a: cfg.log_exponent_a,
                termination_phi_log: self.termination_phi_log,
                fixed_step: self.fixed_step,
            },
            config: cfg.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Constants {
    pub delta: f64,
    pub phase_budget: usize,
    pub alpha_cap: f64,
    pub log_exponent_a: f64,
    pub termination_phi_log: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_step: Option<f64>,
}

/// Serialized solve result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveDocument {
    pub certificate: CertificateDocument,
    pub phases_used: usize,
    pub total_iterations: usize,
    pub rescales: usize,
    pub phase_iterations: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roundedness: Option<Roundedness>,
    pub constants: Constants,
    pub config: SolveConfig,
}

impl SolveDocument {
    pub fn transform_log(&self) -> &[StepDocument] {
        &self.certificate.transform_log
    }
}

/// Runs the phase/rescale loop.
pub fn solve<T: Scalar>(instance: &ConeInstance<T>, cfg: &SolveConfig) -> Result<SolveResult<T>> {
    cfg.validate()?;
    let n = instance.n();
    let budget = cfg.phase_budget(n);
    let delta = cfg.delta(n);
    let alpha_cap = T::c(cfg.alpha_cap);
    let mut run = Progress {
        norm: NormState::identity(n),
        log: TransformLog::new(),
        working: normalize_rows(instance, &NormState::identity(n))?,
        trace: Vec::new(),
        reports: Vec::new(),
        stats: Vec::new(),
        phase_iterations: Vec::new(),
        total: 0,
        delta,
        budget,
        termination_phi_log: cfg.termination_phi_log,
        fixed_step: cfg.fixed_step(n),
    };

    for phase in 0..budget {
        let mut pc = PhaseConfig::new(cfg.phase_mode, T::c(delta));
        let slowdown = cfg.fixed_step(n).map_or(1, |eps| (0.5 / eps).ceil() as usize);
        pc.max_iters = cfg
            .max_iters_per_phase
            .unwrap_or_else(|| default_max_iters(cfg.phase_mode, run.working.m(), n, T::c(delta)) * slowdown);
        pc.fixed_step = cfg.fixed_step(n).map(T::c);
        pc.log_exponent_a = T::c(cfg.log_exponent_a);
        pc.seed = rng::sub_seed(cfg.seed, "phase", phase as u64);
        pc.termination_phi_log = T::c(cfg.termination_phi_log);
        pc.phase_index = phase;
        pc.record_trace = cfg.record_trace;

        let out = run_phase(&run.working, &pc, &run.norm).map_err(|e| e.in_phase(phase))?;
        run.total += out.iterations;
        run.trace.extend(out.trace);
        run.stats.push(out.stats);
        run.phase_iterations.push(out.iterations);

        match out.result {
            PhaseResult::Feasible { x } => {
                let original =
                    if cfg.rescale_mode == RescaleKind::NormUpdate { x.clone() } else { pull_back(&x, &run.log) };
                let margin = instance.min_original_margin(&original);
                if !(margin > T::zero()) {
                    return Err(Error::Precondition {
                        op: "pull-back of a feasible point (original margin > 0)",
                        measured: margin.as_f64(),
                        bound: 0.0,
                    }
                    .in_phase(phase));
                }
                return Ok(run.finish(Certificate::Feasible { x: original }, phase + 1, Some(x)));
            }
            PhaseResult::Exhausted => {
                let summary = ExhaustionSummary {
                    phases: phase + 1,
                    iterations: run.total,
                    reason: format!(
                        "phase {phase} hit its iteration cap of {}; likely infeasible or rho below threshold",
                        pc.max_iters
                    ),
                };
                return Ok(run.finish(Certificate::BudgetExhausted(summary), phase + 1, None));
            }
            PhaseResult::Evidence { lambda, .. } => {
                let report = rescale_step(&mut run, cfg, &lambda, alpha_cap, phase).map_err(|e| e.in_phase(phase))?;
                if cfg.record_trace {
                    run.trace.push(TraceRecord::Rescale { phase, report: report.clone() });
                }
                run.reports.push(report);
            }
        }
    }
    let summary = ExhaustionSummary {
        phases: budget,
        iterations: run.total,
        reason: format!("phase budget of {budget} used up; likely infeasible or rho below threshold"),
    };
    Ok(run.finish(Certificate::BudgetExhausted(summary), budget, None))
}

struct Progress<T> {
    norm: NormState<T>,
    log: TransformLog<T>,
    working: ConeInstance<T>,
    trace: Vec<TraceRecord>,
    reports: Vec<RescaleReport>,
    stats: Vec<PhaseStats>,
    phase_iterations: Vec<usize>,
    total: usize,
    delta: f64,
    budget: usize,
    termination_phi_log: f64,
    fixed_step: Option<f64>,
}

impl<T: Scalar> Progress<T> {
    fn finish(self, certificate: Certificate<T>, phases_used: usize, final_iterate: Option<Vec<T>>) -> SolveResult<T> {
        SolveResult {
            certificate,
            phases_used,
            total_iterations: self.total,
            rescales: self.reports.len(),
            transform_log: self.log,
            norm: self.norm,
            final_instance: self.working,
            trace: self.trace,
            phase_stats: self.stats,
            phase_iterations: self.phase_iterations,
            rescale_reports: self.reports,
            roundedness: None,
            final_iterate,
            delta: self.delta,
            budget: self.budget,
            termination_phi_log: self.termination_phi_log,
            fixed_step: self.fixed_step,
        }
    }
}

fn rescale_step<T: Scalar>(
    run: &mut Progress<T>,
    cfg: &SolveConfig,
    lambda: &[T],
    alpha_cap: T,
    phase: usize,
) -> Result<RescaleReport> {
    Ok(match cfg.rescale_mode {
        RescaleKind::Rank1 => {
            let dir = if cfg.derandomize {
                derandomized_direction(&run.working, lambda)?
            } else {
                gaussian_subset_direction(&run.working, lambda, rng::sub_seed(cfg.seed, "rescale", phase as u64))?
            };
            let (next, step, mut report) = rank1_rescale(&run.working, lambda, &dir.c)?;
            report.retries = Some(dir.retries);
            report.derandomized = dir.derandomized;
            run.working = next;
            run.log.push(step);
            report
        }
        RescaleKind::MultiRank => {
            let (next, step, report) = multirank_rescale(&run.working, lambda, alpha_cap)?;
            run.working = next;
            run.log.push(step);
            report
        }
        RescaleKind::NormUpdate => {
            let (h, next, report) = norm_update(&run.norm, lambda, &run.working, alpha_cap)?;
            run.norm = h;
            run.working = next;
            report
        }
    })
}

/// `<A_i, z> >= 1/T - 1e-12` for every row and `‖z‖ <= 1/2 + 1e-12`.
pub fn roundedness_check<T: Scalar>(instance: &ConeInstance<T>, z: &[T], t: f64) -> bool {
    if z.len() != instance.n() {
        return false;
    }
    let inner = 1.0 / t;
    let margins_ok = instance.rows().row_iter().all(|r| dot(r, z).as_f64() >= inner - 1e-12);
    margins_ok && norm2(z).as_f64() <= 0.5 + 1e-12
}

/// Solves with `ln Φ < -1` (or `Φ < 1/m` for the fixed-step variant) as
/// the MWU stopping rule and reports the rounding `z = x^(T) / T` of the
/// final cone.
pub fn john_ellipsoid<T: Scalar>(instance: &ConeInstance<T>, cfg: &SolveConfig) -> Result<SolveResult<T>> {
    if !cfg.phase_mode.is_mwu() {
        return Err(Error::Config("rounding needs an MWU phase mode".into()));
    }
    if cfg.rescale_mode == RescaleKind::NormUpdate {
        return Err(Error::Config("rounding is reported in transformed coordinates; use rank1 or multirank".into()));
    }
    let mut cfg = cfg.clone();
    let target = if cfg.fixed_step_rounding { -(instance.m() as f64).ln().max(1.0) } else { -1.0 };
    cfg.termination_phi_log = cfg.termination_phi_log.min(target);
    let mut result = solve(instance, &cfg)?;
    if let (Some(x), Some(&t)) = (&result.final_iterate, result.phase_iterations.last()) {
        if result.certificate.is_feasible() && t > 0 {
            let tf = T::from_usize_lossy(t);
            let z: Vec<T> = x.iter().map(|&v| v / tf).collect();
            let check_passed = roundedness_check(&result.final_instance, &z, t as f64);
            let zn = norm2(&z).as_f64();
            result.roundedness = Some(Roundedness {
                center: z.iter().map(|v| v.as_f64()).collect(),
                t,
                inner_radius: 1.0 / t as f64,
                outer_radius_bound: 1.0 + zn,
                ratio: (1.0 + zn) * t as f64,
                check_passed,
            });
        }
    }
    Ok(result)
}
