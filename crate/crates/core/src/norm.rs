//! The norm `‖x‖_H = sqrt(x^T H x)` and its dual `‖·‖_{H^{-1}}`.

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// A symmetric positive definite matrix `H` together with cached spectral
/// factors. `H` always has the form `I + sum_i h_i a_i a_i^T` over the
/// original instance rows; `coefficients` records the `h_i` when the norm
/// was produced by norm updates (empty for the identity).
#[derive(Clone, Debug)]
pub struct NormState<T> {
    h: Matrix<T>,
    coefficients: Vec<T>,
    identity: bool,
    h_inv: Matrix<T>,
    h_inv_sqrt: Matrix<T>,
    h_sqrt: Matrix<T>,
}

impl<T: Scalar> NormState<T> {
    pub fn identity(n: usize) -> Self {
        let i = Matrix::identity(n);
        Self {
            h: i.clone(),
            coefficients: Vec::new(),
            identity: true,
            h_inv: i.clone(),
            h_inv_sqrt: i.clone(),
            h_sqrt: i,
        }
    }

    /// Wraps an SPD matrix, computing its factors.
    pub fn from_matrix(h: Matrix<T>) -> Result<Self> {
        Self::with_coefficients(h, Vec::new())
    }

    pub(crate) fn with_coefficients(mut h: Matrix<T>, coefficients: Vec<T>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::Dimensions("norm matrix must be square".into()));
        }
        if !h.is_finite() {
            return Err(Error::NonFiniteInput("norm matrix"));
        }
        h.symmetrize();
        let eig = h.sym_eigen();
        let min = eig.min();
        if !(min > T::zero()) {
            return Err(Error::NotPositiveDefinite(min.as_f64()));
        }
        let identity = h == Matrix::identity(h.nrows());
        Ok(Self {
            h_inv: eig.map(|x| x.recip()),
            h_inv_sqrt: eig.map(|x| x.sqrt().recip()),
            h_sqrt: eig.map(|x| x.sqrt()),
            h,
            coefficients,
            identity,
        })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.h
    }

    pub fn inverse(&self) -> &Matrix<T> {
        &self.h_inv
    }

    pub fn inv_sqrt(&self) -> &Matrix<T> {
        &self.h_inv_sqrt
    }

    pub fn sqrt(&self) -> &Matrix<T> {
        &self.h_sqrt
    }

    /// Coefficients `h_i` over original rows (empty until a norm update).
    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    /// `‖x‖_H`
    pub fn primal(&self, x: &[T]) -> T {
        if self.identity {
            dot(x, x).sqrt()
        } else {
            self.h.quad_form(x).max(T::zero()).sqrt()
        }
    }

    /// `‖v‖_{H^{-1}}`
    pub fn dual(&self, v: &[T]) -> T {
        if self.identity {
            dot(v, v).sqrt()
        } else {
            self.h_inv.quad_form(v).max(T::zero()).sqrt()
        }
    }

    /// `H^{-1} v`
    pub fn apply_inverse(&self, v: &[T]) -> Vec<T> {
        if self.identity {
            v.to_vec()
        } else {
            self.h_inv.matvec(v)
        }
    }

    /// `H^{-1/2} v`
    pub fn apply_inv_sqrt(&self, v: &[T]) -> Vec<T> {
        if self.identity {
            v.to_vec()
        } else {
            self.h_inv_sqrt.matvec(v)
        }
    }

    /// `<u, v>_{H^{-1}} = u^T H^{-1} v`
    pub fn dual_inner(&self, u: &[T], v: &[T]) -> T {
        if self.identity {
            dot(u, v)
        } else {
            dot(u, &self.h_inv.matvec(v))
        }
    }

    /// `H^{-1/2} A H^{-1/2}` for symmetric `A`.
    pub fn whiten(&self, a: &Matrix<T>) -> Matrix<T> {
        if self.identity {
            return a.clone();
        }
        let mut w = self.h_inv_sqrt.matmul(a).matmul(&self.h_inv_sqrt);
        w.symmetrize();
        w
    }

    /// `I + sum_i h_i a_i a_i^T` rebuilt from the coefficient log.
    pub fn reconstruct(&self, original_rows: &Matrix<T>) -> Matrix<T> {
        let n = self.dim();
        if self.coefficients.is_empty() {
            return Matrix::identity(n);
        }
        let sum = Matrix::outer_sum(
            n,
            self.coefficients.iter().copied().zip(original_rows.row_iter()),
        );
        Matrix::identity(n).add(&sum)
    }

    pub fn to_document(&self) -> NormDocument {
        NormDocument {
            h: self.h.cast::<f64>().to_rows(),
            coefficients: self.coefficients.iter().map(|c| c.as_f64()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormDocument {
    pub h: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<f64>,
}
