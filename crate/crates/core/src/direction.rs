//! Update direction for the modified gradient descent: project the gradient
//! onto a significant eigenspace of the second moment via repeated matrix
//! squaring, then pick the step size.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Matrix};
use crate::norm::NormState;
use crate::potential::SecondMoment;
use crate::scalar::{log_factor, Scalar};
use serde::{Deserialize, Serialize};

/// `C = 1 / (2 e^2)`, the worst bucket constant of the case analysis.
pub fn case_constant<T: Scalar>() -> T {
    T::one() / (T::c(2.0) * T::E() * T::E())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenCase {
    /// `<z,z_k> >= C/K` and `<z,N z_k> >= C ‖N z_k‖ / K²`.
    Case1,
    /// `k = K`, `<z,z_K> >= C/K` and `‖N z_K‖ <= K / 2^K`.
    Case2,
}

/// Quantities are with respect to the halved matrix `N/2`; `z_k` is
/// `(I - N/2)^{2^k} z`.
#[derive(Clone, Debug)]
pub struct EigenComponentResult<T> {
    pub k: usize,
    pub z_k: Vec<T>,
    pub case: EigenCase,
    pub inner_z_zk: T,
    pub inner_z_nzk: T,
    pub norm_nzk: T,
}

/// Smallest level `k` in `1..=K` at which the first case holds, or the
/// second case at `K`. A zero `‖N z_k‖` never counts as the first case.
pub fn approx_eigen_component<T: Scalar>(z: &[T], n_mat: &Matrix<T>, levels: usize) -> Result<EigenComponentResult<T>> {
    approx_eigen_component_with(z, n_mat, levels, case_constant())
}

pub fn approx_eigen_component_with<T: Scalar>(
    z: &[T],
    n_mat: &Matrix<T>,
    levels: usize,
    c: T,
) -> Result<EigenComponentResult<T>> {
    let n = z.len();
    if n_mat.nrows() != n || n_mat.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: n_mat.nrows() });
    }
    let zn = norm2(z);
    if (zn - T::one()).abs() > T::tol(1e-9) {
        return Err(Error::Precondition { op: "approx_eigen_component (unit z)", measured: zn.as_f64(), bound: 1.0 });
    }
    if levels == 0 {
        return Err(Error::Config("approx_eigen_component needs K >= 1".into()));
    }
    let kk = T::from_usize_lossy(levels);
    let c_over_k = c / kk;
    let c_over_k2 = c / (kk * kk);
    let half = n_mat.scaled(T::c(0.5));
    let mut p = Matrix::identity(n).sub(&half);
    let mut table = Vec::with_capacity(levels);
    let mut last = None;
    for k in 1..=levels {
        p = p.matmul(&p);
        p.symmetrize();
        let z_k = p.matvec(z);
        let nz = half.matvec(&z_k);
        let inner_zz = dot(z, &z_k);
        let inner_znz = dot(z, &nz);
        let norm_nz = norm2(&nz);
        table.push((k, inner_zz.as_f64(), inner_znz.as_f64(), norm_nz.as_f64()));
        if inner_zz >= c_over_k && norm_nz > T::zero() && inner_znz >= c_over_k2 * norm_nz {
            return Ok(EigenComponentResult {
                k,
                z_k,
                case: EigenCase::Case1,
                inner_z_zk: inner_zz,
                inner_z_nzk: inner_znz,
                norm_nzk: norm_nz,
            });
        }
        last = Some((z_k, inner_zz, inner_znz, norm_nz));
    }
    let (z_k, inner_zz, inner_znz, norm_nz) = last.expect("levels >= 1");
    let bound = kk / T::c(2.0).powi(levels as i32);
    if inner_zz >= c_over_k && norm_nz <= bound {
        return Ok(EigenComponentResult {
            k: levels,
            z_k,
            case: EigenCase::Case2,
            inner_z_zk: inner_zz,
            inner_z_nzk: inner_znz,
            norm_nzk: norm_nz,
        });
    }
    Err(Error::EigenCase { table })
}

/// Direction `p = H^{-1/2} z_k` with the quantities the step rule needs.
#[derive(Clone, Debug)]
pub struct Direction<T> {
    pub p: Vec<T>,
    pub component: EigenComponentResult<T>,
    /// `‖y‖_{H^{-1}}`
    pub norm_y_dual: T,
    /// `‖p‖_H`
    pub norm_p: T,
    /// `‖M p‖_{H^{-1}}`
    pub norm_mp_dual: T,
    /// `<y, p>`
    pub y_dot_p: T,
    /// `<y, M p>_{H^{-1}}`
    pub y_mp_dual: T,
    /// `p^T M p`
    pub p_m_p: T,
}

fn check_identity<T: Scalar>(which: &'static str, lhs: T, rhs: T) -> Result<()> {
    let tol = T::tol(1e-8) * lhs.abs().max(rhs.abs()) + T::tol(1e-12);
    if (lhs - rhs).abs() <= tol {
        Ok(())
    } else {
        Err(Error::Identity { which, lhs: lhs.as_f64(), rhs: rhs.as_f64() })
    }
}

/// Whitens `y` and `M` by `H^{-1/2}`, runs [`approx_eigen_component`] and
/// maps the result back. The four transfer identities between the whitened
/// and original geometry are checked to `1e-8` relative.
pub fn choose_direction<T: Scalar>(
    y: &[T],
    moment: &SecondMoment<T>,
    norm: &NormState<T>,
    levels: usize,
) -> Result<Direction<T>> {
    let ny = norm.dual(y);
    if !(ny > T::zero()) {
        return Err(Error::Precondition { op: "choose_direction (‖y‖ > 0)", measured: ny.as_f64(), bound: 0.0 });
    }
    let mut z = norm.apply_inv_sqrt(y);
    z.iter_mut().for_each(|v| *v /= ny);
    let whitened = norm.whiten(&moment.m);
    let component = approx_eigen_component(&z, &whitened, levels)?;
    let p = norm.apply_inv_sqrt(&component.z_k);

    let mp = moment.apply(&p);
    let norm_p = norm.primal(&p);
    let norm_mp_dual = norm.dual(&mp);
    let y_dot_p = dot(y, &p);
    let y_mp_dual = norm.dual_inner(y, &mp);
    let p_m_p = dot(&p, &mp);

    let nzk = whitened.matvec(&component.z_k);
    check_identity("‖p‖_H = ‖z_k‖", norm_p, norm2(&component.z_k))?;
    check_identity("‖Mp‖ = ‖N z_k‖", norm_mp_dual, norm2(&nzk))?;
    check_identity("<ŷ,p> = <z,z_k>", y_dot_p / ny, dot(&z, &component.z_k))?;
    check_identity("<ŷ,Mp> = <z,N z_k>", y_mp_dual / ny, dot(&z, &nzk))?;

    Ok(Direction { p, component, norm_y_dual: ny, norm_p, norm_mp_dual, y_dot_p, y_mp_dual, p_m_p })
}

/// `min{ ‖y‖ / (4 L^{2} ‖Mp‖), 1 / (2 L), 1/2 }` with `L = log2(n+2)^a`.
pub fn step_size<T: Scalar>(norm_y_dual: T, norm_mp_dual: T, n: usize, a: T) -> T {
    let l = log_factor::<T>(n).powf(a);
    let second = T::one() / (T::c(2.0) * l);
    let first = if norm_mp_dual > T::zero() {
        norm_y_dual / (T::c(4.0) * l * l * norm_mp_dual)
    } else {
        T::infinity()
    };
    first.min(second).min(T::c(0.5))
}

pub fn choose_step<T: Scalar>(y: &[T], p: &[T], moment: &SecondMoment<T>, norm: &NormState<T>, a: T) -> T {
    let mp = moment.apply(p);
    step_size(norm.dual(y), norm.dual(&mp), y.len(), a)
}
