//! The exponential potential `Φ(x) = Σ_i exp(-<A_i, x>)`, its normalized
//! gradient `y = -∇Φ/Φ`, the weights `λ` and the second moment `M = ∇²Φ/Φ`.
//!
//! Everything is computed in log space with a max-exponent shift; `Φ` is
//! never formed directly.

use crate::error::{Error, Result};
use crate::instance::ConeInstance;
use crate::linalg::{dot, Matrix};
use crate::norm::NormState;
use crate::scalar::Scalar;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug)]
pub struct PotentialEval<T> {
    /// `ln Φ(x)`
    pub phi_log: T,
    pub lambda: Vec<T>,
    /// `Σ λ_i A_i`
    pub y: Vec<T>,
    /// `‖y‖_{H^{-1}}`
    pub norm_y_dual: T,
}

/// Log-sum-exp of `exponents` and the normalized softmax weights.
pub fn log_sum_exp<T: Scalar>(exponents: &[T]) -> (T, Vec<T>) {
    let shift = exponents.iter().copied().fold(T::neg_infinity(), T::max);
    let mut w: Vec<T> = exponents.iter().map(|&e| (e - shift).exp()).collect();
    let total: T = w.iter().copied().sum();
    let inv = total.recip();
    w.iter_mut().for_each(|v| *v *= inv);
    (shift + total.ln(), w)
}

pub fn evaluate<T: Scalar>(instance: &ConeInstance<T>, x: &[T], norm: &NormState<T>) -> Result<PotentialEval<T>> {
    if x.len() != instance.n() {
        return Err(Error::DimensionMismatch { expected: instance.n(), found: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("potential point"));
    }
    let exponents: Vec<T> = instance.rows().row_iter().map(|r| -dot(r, x)).collect();
    let (phi_log, lambda) = log_sum_exp(&exponents);
    let y = instance.combine(&lambda);
    let norm_y_dual = norm.dual(&y);
    Ok(PotentialEval { phi_log, lambda, y, norm_y_dual })
}

/// `ln Φ(x)` only.
pub fn phi_log<T: Scalar>(instance: &ConeInstance<T>, x: &[T]) -> T {
    let exponents: Vec<T> = instance.rows().row_iter().map(|r| -dot(r, x)).collect();
    log_sum_exp(&exponents).0
}

#[derive(Clone, Debug)]
pub struct SecondMoment<T> {
    pub m: Matrix<T>,
}

impl<T: Scalar> SecondMoment<T> {
    pub fn apply(&self, p: &[T]) -> Vec<T> {
        self.m.matvec(p)
    }

    pub fn trace(&self) -> T {
        self.m.trace()
    }
}

/// `M = Σ λ_i A_i A_i^T`, symmetrized.
pub fn second_moment<T: Scalar>(instance: &ConeInstance<T>, lambda: &[T]) -> SecondMoment<T> {
    let mut m = Matrix::outer_sum(instance.n(), lambda.iter().copied().zip(instance.rows().row_iter()));
    m.symmetrize();
    SecondMoment { m }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub step: f64,
    pub curvature_step: f64,
    /// `max_j |fd_j - g_j| / ‖g‖_∞` for `∇Φ/Φ` against `-y`.
    pub gradient_rel_err: f64,
    /// Worst relative error of `d²Φ/dt²/Φ` against `p^T M p` over the probes.
    pub curvature_rel_err: f64,
    pub probes: usize,
}

/// Finite-difference oracle for `∇Φ = -Φ y` and `∇²Φ = Φ M` at `x`
/// (Euclidean geometry). Differences are taken on `Φ(x ± h v) / Φ(x)`
/// computed from log-potential differences. The curvature step is
/// `clamp(100 h, 1e-4, 1e-2)`, which balances truncation against rounding
/// for second differences.
pub fn grad_check<T: Scalar>(instance: &ConeInstance<T>, x: &[T], h: f64, seed: u64) -> Result<GradCheckReport> {
    let id = NormState::identity(instance.n());
    let ev = evaluate(instance, x, &id)?;
    let n = instance.n();
    let hh = T::c(h);
    let rel_phi = |v: &[T], t: T| -> T {
        let shifted: Vec<T> = x.iter().zip(v).map(|(&a, &b)| a + t * b).collect();
        (phi_log(instance, &shifted) - ev.phi_log).exp()
    };

    let mut fd = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        fd[j] = (rel_phi(&e, hh) - rel_phi(&e, -hh)) / (T::c(2.0) * hh);
        e[j] = T::zero();
    }
    let scale = ev.y.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let grad_err = fd
        .iter()
        .zip(&ev.y)
        .map(|(&f, &y)| (f + y).abs())
        .fold(T::zero(), T::max)
        / scale.max(T::min_positive_value());

    let hc = T::c((100.0 * h).clamp(1e-4, 1e-2));
    let mm = second_moment(instance, &ev.lambda);
    let mut rng = crate::rng::stream(seed, "grad-check", 0);
    let probes = 10;
    let mut curv_err = T::zero();
    for _ in 0..probes {
        let mut p: Vec<T> = (0..n).map(|_| T::c(rng.sample::<f64, _>(StandardNormal))).collect();
        let pn = crate::linalg::norm2(&p);
        p.iter_mut().for_each(|v| *v /= pn);
        let second = (rel_phi(&p, hc) - T::c(2.0) + rel_phi(&p, -hc)) / (hc * hc);
        let exact = mm.m.quad_form(&p);
        let err = (second - exact).abs() / exact.abs().max(T::min_positive_value());
        curv_err = curv_err.max(err);
    }
    Ok(GradCheckReport {
        step: h,
        curvature_step: hc.as_f64(),
        gradient_rel_err: grad_err.as_f64(),
        curvature_rel_err: curv_err.as_f64(),
        probes,
    })
}
