//! Initial phases: each either finds a strictly feasible point or returns
//! convex weights `λ` with `‖λA‖_{H^{-1}} <= delta`.

use crate::direction::{choose_direction, step_size, EigenCase};
use crate::error::{Error, Result};
use crate::instance::ConeInstance;
use crate::linalg::{axpy, dot, norm1, norm2};
use crate::norm::NormState;
use crate::potential::{evaluate, log_sum_exp, second_moment};
use crate::scalar::{log_factor, squaring_levels, Scalar};
use crate::trace::TraceRecord;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    ClassicalPerceptron,
    SmoothPerceptron,
    MwuStandard,
    MwuModified,
}

impl PhaseMode {
    /// CLI spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseMode::ClassicalPerceptron => "classical",
            PhaseMode::SmoothPerceptron => "smooth",
            PhaseMode::MwuStandard => "mwu",
            PhaseMode::MwuModified => "mwu-fast",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "classical" => PhaseMode::ClassicalPerceptron,
            "smooth" => PhaseMode::SmoothPerceptron,
            "mwu" => PhaseMode::MwuStandard,
            "mwu-fast" => PhaseMode::MwuModified,
            _ => return None,
        })
    }

    pub fn is_mwu(self) -> bool {
        matches!(self, PhaseMode::MwuStandard | PhaseMode::MwuModified)
    }
}

impl fmt::Display for PhaseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct PhaseConfig<T> {
    /// Evidence threshold on `‖λA‖_{H^{-1}}`.
    pub delta: T,
    pub max_iters: usize,
    pub mode: PhaseMode,
    /// Exponent `a` in the `(log n)^a` factors of the step rule.
    pub log_exponent_a: T,
    pub seed: u64,
    /// MWU phases stop once `ln Φ(x)` drops below this (0, or -1 when a
    /// well-rounded final phase is wanted).
    pub termination_phi_log: T,
    /// Phase index written into trace records.
    pub phase_index: usize,
    pub record_trace: bool,
    /// Step size of standard gradient descent in place of `1/2`.
    pub fixed_step: Option<T>,
}

impl<T: Scalar> PhaseConfig<T> {
    pub fn new(mode: PhaseMode, delta: T) -> Self {
        Self {
            delta,
            max_iters: 1_000_000,
            mode,
            log_exponent_a: T::one(),
            seed: 0,
            termination_phi_log: T::zero(),
            phase_index: 0,
            record_trace: true,
            fixed_step: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > T::zero()) {
            return Err(Error::Config(format!("phase delta must be positive, got {}", self.delta)));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("phase max_iters must be at least 1".into()));
        }
        if let Some(eps) = self.fixed_step {
            if !(eps > T::zero() && eps <= T::one()) {
                return Err(Error::Config(format!("fixed step must lie in (0, 1], got {eps}")));
            }
        }
        Ok(())
    }
}

/// Iteration budget per phase derived from the per-mode worst-case bound
/// (doubled, plus slack).
pub fn default_max_iters<T: Scalar>(mode: PhaseMode, m: usize, n: usize, delta: T) -> usize {
    let d = delta.as_f64();
    let lnm = (m as f64).ln() + 1.0;
    let bound = match mode {
        PhaseMode::ClassicalPerceptron => 1.0 / (d * d),
        PhaseMode::SmoothPerceptron => 4.0 * lnm.sqrt() / d,
        PhaseMode::MwuStandard => 4.0 * lnm / (d * d),
        PhaseMode::MwuModified => {
            let l = ((n + 2) as f64).log2();
            4.0 * lnm / (d * d).max(1e-300) / l.max(1.0)
        }
    };
    (2.0 * bound).min(5e7) as usize + 1000
}

#[derive(Clone, Debug, PartialEq)]
pub enum PhaseResult<T> {
    /// Strictly feasible point in the phase's working coordinates.
    Feasible { x: Vec<T> },
    Evidence { lambda: Vec<T>, norm: T },
    Exhausted,
}

impl<T> PhaseResult<T> {
    pub fn label(&self) -> &'static str {
        match self {
            PhaseResult::Feasible { .. } => "feasible",
            PhaseResult::Evidence { .. } => "evidence",
            PhaseResult::Exhausted => "exhausted",
        }
    }
}

/// Bookkeeping for the per-step inequalities asserted inside the loops.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PhaseStats {
    /// Steps at which a descent inequality was checked.
    pub descent_checks: usize,
    /// Largest `(lhs - rhs)` seen across those checks (log domain); the
    /// loop errors out when it exceeds the tolerance.
    pub worst_descent_excess: f64,
    pub case1: usize,
    pub case2: usize,
    /// Case-2 steps with `‖Mp‖ > 1/n²`.
    pub case2_large_mp: usize,
    /// Steps where neither step-rule hypothesis held with `a` as configured.
    pub hypothesis_misses: usize,
    /// Iterations where `ln‖y‖ + 2 ln Φ` failed to decrease.
    pub monitor_non_decrease: usize,
    /// Smallest average decrease of `ln‖y‖ + 2 ln Φ` over windows of `n`
    /// steps, multiplied by `n (log n)^3`.
    pub window_constant: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct PhaseOutcome<T> {
    pub result: PhaseResult<T>,
    /// Update steps taken.
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    pub stats: PhaseStats,
}

/// Rechecks simplex membership and the norm bound from scratch.
fn evidence<T: Scalar>(instance: &ConeInstance<T>, norm: &NormState<T>, mut lambda: Vec<T>, delta: T) -> Option<(Vec<T>, T)> {
    lambda.iter_mut().for_each(|l| *l = l.max(T::zero()));
    let s = norm1(&lambda);
    if !(s > T::zero()) {
        return None;
    }
    lambda.iter_mut().for_each(|l| *l /= s);
    let measured = norm.dual(&instance.combine(&lambda));
    let l1 = norm1(&lambda);
    if (l1 - T::one()).abs() <= T::tol(1e-12) && measured <= delta + T::tol(1e-12) {
        Some((lambda, measured))
    } else {
        None
    }
}

struct Tracer {
    phase: usize,
    mode: &'static str,
    on: bool,
    records: Vec<TraceRecord>,
}

impl Tracer {
    fn new<T: Scalar>(cfg: &PhaseConfig<T>) -> Self {
        Self { phase: cfg.phase_index, mode: cfg.mode.as_str(), on: cfg.record_trace, records: Vec::new() }
    }

    fn push<T: Scalar>(&mut self, iter: usize, phi_log: T, norm_y_dual: T, epsilon: T) {
        if self.on {
            self.records.push(TraceRecord::Iteration {
                phase: self.phase,
                iter,
                phi_log: phi_log.as_f64(),
                norm_y_dual: norm_y_dual.as_f64(),
                epsilon: epsilon.as_f64(),
                mode: self.mode.to_string(),
            });
        }
    }
}

fn finish<T: Scalar>(result: PhaseResult<T>, iterations: usize, tracer: Tracer, stats: PhaseStats) -> PhaseOutcome<T> {
    let mut trace = tracer.records;
    if tracer.on {
        trace.push(TraceRecord::PhaseEnd { phase: tracer.phase, outcome: result.label().into(), iterations });
    }
    PhaseOutcome { result, iterations, trace, stats }
}

/// Dispatches on `cfg.mode`.
pub fn run_phase<T: Scalar>(instance: &ConeInstance<T>, cfg: &PhaseConfig<T>, norm: &NormState<T>) -> Result<PhaseOutcome<T>> {
    match cfg.mode {
        PhaseMode::ClassicalPerceptron => {
            if !norm.is_identity() {
                return Err(Error::Config("the classical perceptron runs in the Euclidean norm only".into()));
            }
            classical_perceptron(instance, cfg)
        }
        PhaseMode::SmoothPerceptron => smooth_perceptron(instance, cfg, norm),
        PhaseMode::MwuStandard => mwu_standard(instance, cfg, norm),
        PhaseMode::MwuModified => mwu_modified(instance, cfg, norm),
    }
}

/// Baseline: add the most violated row (lowest index on ties). Evidence is
/// the visit-frequency average, whose combination is `x / t`.
pub fn classical_perceptron<T: Scalar>(instance: &ConeInstance<T>, cfg: &PhaseConfig<T>) -> Result<PhaseOutcome<T>> {
    cfg.validate()?;
    let id = NormState::identity(instance.n());
    let mut tracer = Tracer::new(cfg);
    let mut x = vec![T::zero(); instance.n()];
    let mut visits = vec![0usize; instance.m()];
    for t in 0..=cfg.max_iters {
        let margins = instance.margins(&x);
        let (worst, worst_margin) = margins
            .iter()
            .enumerate()
            .fold((0, T::infinity()), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
        let avg_norm = if t > 0 { norm2(&x) / T::from_usize_lossy(t) } else { T::infinity() };
        tracer.push(t, T::nan(), avg_norm, T::one());
        if worst_margin > T::zero() {
            return Ok(finish(PhaseResult::Feasible { x }, t, tracer, PhaseStats::default()));
        }
        if t > 0 && avg_norm <= cfg.delta {
            let lambda: Vec<T> = visits.iter().map(|&v| T::from_usize_lossy(v)).collect();
            if let Some((lambda, norm)) = evidence(instance, &id, lambda, cfg.delta) {
                return Ok(finish(PhaseResult::Evidence { lambda, norm }, t, tracer, PhaseStats::default()));
            }
        }
        if t == cfg.max_iters {
            break;
        }
        axpy(T::one(), instance.row(worst), &mut x);
        visits[worst] += 1;
    }
    Ok(finish(PhaseResult::Exhausted, cfg.max_iters, tracer, PhaseStats::default()))
}

/// Entropy-smoothed perceptron (excessive-gap scheme). The primal iterate is
/// `x`, the dual iterate the weight vector `u`; the smoothing parameter
/// shrinks as `μ_{k+1} = (1 - θ_k) μ_k`, `θ_k = 2/(k+3)`.
pub fn smooth_perceptron<T: Scalar>(
    instance: &ConeInstance<T>,
    cfg: &PhaseConfig<T>,
    norm: &NormState<T>,
) -> Result<PhaseOutcome<T>> {
    cfg.validate()?;
    let m = instance.m();
    let mut tracer = Tracer::new(cfg);
    let lift = |u: &[T]| norm.apply_inverse(&instance.combine(u));
    let softmax = |x: &[T], mu: T| -> Vec<T> {
        let e: Vec<T> = instance.rows().row_iter().map(|r| -dot(r, x) / mu).collect();
        log_sum_exp(&e).1
    };
    let uniform = vec![T::one() / T::from_usize_lossy(m); m];
    let mut mu = T::one();
    let mut x = lift(&uniform);
    let mut u = softmax(&x, mu);
    let two = T::c(2.0);
    for k in 0..=cfg.max_iters {
        let margins = instance.margins(&x);
        let min_margin = margins.iter().copied().fold(T::infinity(), T::min);
        let w_norm = norm.dual(&instance.combine(&u));
        let neg: Vec<T> = margins.iter().map(|&s| -s).collect();
        tracer.push(k, log_sum_exp(&neg).0, w_norm, mu);
        if min_margin > T::zero() {
            return Ok(finish(PhaseResult::Feasible { x }, k, tracer, PhaseStats::default()));
        }
        if w_norm <= cfg.delta {
            if let Some((lambda, norm)) = evidence(instance, norm, u.clone(), cfg.delta) {
                return Ok(finish(PhaseResult::Evidence { lambda, norm }, k, tracer, PhaseStats::default()));
            }
        }
        if k == cfg.max_iters {
            break;
        }
        let theta = two / T::from_usize_lossy(k + 3);
        let us = softmax(&x, mu);
        let gu = lift(&u);
        let gs = lift(&us);
        let keep = T::one() - theta;
        for j in 0..x.len() {
            x[j] = keep * (x[j] + theta * gu[j]) + theta * theta * gs[j];
        }
        mu *= keep;
        let un = softmax(&x, mu);
        for (ui, &vi) in u.iter_mut().zip(&un) {
            *ui = keep * *ui + theta * vi;
        }
    }
    Ok(finish(PhaseResult::Exhausted, cfg.max_iters, tracer, PhaseStats::default()))
}

fn log_tol<T: Scalar>(v: T) -> T {
    T::tol(1e-9) * v.abs().max(T::one())
}

/// Gradient descent `x <- x + H^{-1} y / 2` on the potential. Every step is
/// checked against `Φ(x + y/2) <= Φ(x) exp(-‖y‖²/4)` in the log domain.
pub fn mwu_standard<T: Scalar>(
    instance: &ConeInstance<T>,
    cfg: &PhaseConfig<T>,
    norm: &NormState<T>,
) -> Result<PhaseOutcome<T>> {
    cfg.validate()?;
    let mut tracer = Tracer::new(cfg);
    let mut stats = PhaseStats { worst_descent_excess: f64::NEG_INFINITY, ..Default::default() };
    let mut x = vec![T::zero(); instance.n()];
    let step_size = cfg.fixed_step.unwrap_or(T::c(0.5));
    // e^{-u} <= 1 - u + u² for |u| <= 1 and pᵀMp <= ‖y‖² give
    // Φ(x + εy) <= Φ(x) exp(-ε(1-ε)‖y‖²); ε = 1/2 is the usual ‖y‖²/4.
    let gain = step_size * (T::one() - step_size);
    let mut bound: Option<T> = None;
    for t in 0..=cfg.max_iters {
        let ev = evaluate(instance, &x, norm)?;
        if let Some(rhs) = bound {
            let excess = ev.phi_log - rhs;
            stats.descent_checks += 1;
            stats.worst_descent_excess = stats.worst_descent_excess.max(excess.as_f64());
            if excess > log_tol(rhs) {
                return Err(Error::BoundViolation {
                    which: "Φ(x + εy) <= Φ(x) exp(-ε(1-ε)‖y‖²)",
                    iter: t,
                    lhs: ev.phi_log.as_f64(),
                    rhs: rhs.as_f64(),
                });
            }
        }
        let eps = if t == 0 { T::zero() } else { step_size };
        tracer.push(t, ev.phi_log, ev.norm_y_dual, eps);
        if ev.phi_log < cfg.termination_phi_log && instance.is_strictly_feasible(&x) {
            return Ok(finish(PhaseResult::Feasible { x }, t, tracer, stats));
        }
        if ev.norm_y_dual <= cfg.delta {
            if let Some((lambda, norm)) = evidence(instance, norm, ev.lambda.clone(), cfg.delta) {
                return Ok(finish(PhaseResult::Evidence { lambda, norm }, t, tracer, stats));
            }
        }
        if t == cfg.max_iters {
            break;
        }
        let step = norm.apply_inverse(&ev.y);
        axpy(step_size, &step, &mut x);
        bound = Some(ev.phi_log - gain * ev.norm_y_dual * ev.norm_y_dual);
    }
    Ok(finish(PhaseResult::Exhausted, cfg.max_iters, tracer, stats))
}

/// Modified gradient descent: step along the eigen-filtered direction of
/// [`choose_direction`] with the step of [`step_size`]. The product
/// `‖y‖ Φ²` is monitored; three consecutive non-decreases abort the phase.
pub fn mwu_modified<T: Scalar>(
    instance: &ConeInstance<T>,
    cfg: &PhaseConfig<T>,
    norm: &NormState<T>,
) -> Result<PhaseOutcome<T>> {
    cfg.validate()?;
    let n = instance.n();
    let levels = squaring_levels(n);
    let lf = log_factor::<T>(n).powf(cfg.log_exponent_a);
    let tiny_mp = T::one() / T::from_usize_lossy(n * n);
    let mut tracer = Tracer::new(cfg);
    let mut stats = PhaseStats { worst_descent_excess: f64::NEG_INFINITY, ..Default::default() };
    let mut x = vec![T::zero(); n];
    let mut pending: Option<(T, T)> = None;
    let mut prev_monitor: Option<T> = None;
    let mut streak = 0usize;
    let mut history: Vec<T> = Vec::new();
    let mut last_eps = T::zero();
    for t in 0..=cfg.max_iters {
        let ev = evaluate(instance, &x, norm)?;
        let grad_log = ev.norm_y_dual.ln() + ev.phi_log;
        let monitor = grad_log + ev.phi_log;
        if let Some((phi_rhs, grad_rhs)) = pending {
            stats.descent_checks += 1;
            let e1 = ev.phi_log - phi_rhs;
            let e2 = grad_log - grad_rhs;
            stats.worst_descent_excess = stats.worst_descent_excess.max(e1.as_f64()).max(e2.as_f64());
            if e1 > log_tol(phi_rhs) {
                return Err(Error::BoundViolation {
                    which: "Φ(x+εp) <= Φ(x)(1 - ε<y,p> + ε² pᵀMp)",
                    iter: t,
                    lhs: ev.phi_log.as_f64(),
                    rhs: phi_rhs.as_f64(),
                });
            }
            if ev.norm_y_dual > T::zero() && e2 > log_tol(grad_rhs) {
                return Err(Error::BoundViolation {
                    which: "‖∇Φ(x+εp)‖ gradient-norm bound",
                    iter: t,
                    lhs: grad_log.as_f64(),
                    rhs: grad_rhs.as_f64(),
                });
            }
        }
        if let Some(prev) = prev_monitor {
            if monitor < prev + T::tol(1e-12) * prev.abs().max(T::one()) && monitor < prev {
                streak = 0;
            } else {
                stats.monitor_non_decrease += 1;
                streak += 1;
                if streak >= 3 {
                    return Err(Error::MonitorStalled { iter: t, streak });
                }
            }
        }
        prev_monitor = Some(monitor);
        history.push(monitor);
        tracer.push(t, ev.phi_log, ev.norm_y_dual, last_eps);
        if ev.phi_log < cfg.termination_phi_log && instance.is_strictly_feasible(&x) {
            stats.window_constant = window_constant(&history, n);
            return Ok(finish(PhaseResult::Feasible { x }, t, tracer, stats));
        }
        if ev.norm_y_dual <= cfg.delta {
            if let Some((lambda, norm)) = evidence(instance, norm, ev.lambda.clone(), cfg.delta) {
                stats.window_constant = window_constant(&history, n);
                return Ok(finish(PhaseResult::Evidence { lambda, norm }, t, tracer, stats));
            }
        }
        if t == cfg.max_iters {
            break;
        }
        let moment = second_moment(instance, &ev.lambda);
        let dir = choose_direction(&ev.y, &moment, norm, levels)?;
        let eps = step_size(ev.norm_y_dual, dir.norm_mp_dual, n, cfg.log_exponent_a);
        match dir.component.case {
            EigenCase::Case1 => stats.case1 += 1,
            EigenCase::Case2 => {
                stats.case2 += 1;
                if dir.norm_mp_dual > tiny_mp {
                    stats.case2_large_mp += 1;
                }
            }
        }
        let ny = ev.norm_y_dual;
        let aligned = dir.y_dot_p >= ny / lf;
        let hyp1 = aligned && dir.y_mp_dual >= dir.norm_mp_dual * ny / lf;
        let hyp2 = aligned && dir.norm_mp_dual <= tiny_mp;
        if !(hyp1 || hyp2) {
            stats.hypothesis_misses += 1;
        }

        let phi_factor = T::one() - eps * dir.y_dot_p + eps * eps * dir.p_m_p;
        let grad_factor = T::one() + eps * eps * dir.p_m_p / ny
            + (-eps * dir.y_mp_dual + eps * eps * dir.norm_mp_dual * dir.norm_mp_dual) / (ny * ny);
        pending = Some((ev.phi_log + phi_factor.ln(), grad_log + grad_factor.ln()));
        axpy(eps, &dir.p, &mut x);
        last_eps = eps;
    }
    stats.window_constant = window_constant(&history, n);
    Ok(finish(PhaseResult::Exhausted, cfg.max_iters, tracer, stats))
}

fn window_constant<T: Scalar>(history: &[T], n: usize) -> Option<f64> {
    if n == 0 || history.len() <= n {
        return None;
    }
    let l = ((n + 2) as f64).log2();
    let scale = (n as f64) * l * l * l / n as f64;
    history
        .windows(n + 1)
        .map(|w| (w[0] - w[n]).as_f64() * scale)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
}
