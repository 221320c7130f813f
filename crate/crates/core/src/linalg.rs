//! Dense row-major matrices and the handful of kernels the solver needs:
//! products, symmetric eigendecomposition (cyclic Jacobi) and spectral
//! functions built on it (square roots, inverses, operator norms).

use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::ops::{Index, IndexMut};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    /// Builds a matrix from equally long rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self { rows: rows.len(), cols, data }
    }

    pub fn diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// `sum_i w_i v_i v_i^T`.
    pub fn outer_sum<'a, I>(n: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (T, &'a [T])>,
    {
        let mut m = Self::zeros(n, n);
        for (w, v) in terms {
            if w == T::zero() {
                continue;
            }
            for i in 0..n {
                let wi = w * v[i];
                if wi == T::zero() {
                    continue;
                }
                let row = &mut m.data[i * n..(i + 1) * n];
                for (dst, &vj) in row.iter_mut().zip(v) {
                    *dst += wi * vj;
                }
            }
        }
        m
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.row_iter().map(<[T]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        let oc = other.cols;
        for i in 0..self.rows {
            let dst = &mut out.data[i * oc..(i + 1) * oc];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(other.row(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        self.row_iter().map(|r| dot(r, v)).collect()
    }

    /// `v^T A`, i.e. `A^T v`.
    pub fn tmatvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.rows, v.len(), "tmatvec dimension mismatch");
        let mut out = vec![T::zero(); self.cols];
        for (r, &w) in self.row_iter().zip(v) {
            if w != T::zero() {
                axpy(w, r, &mut out);
            }
        }
        out
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// Replaces the matrix by `(A + A^T) / 2`.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        let half = T::c(0.5);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = (self[(i, j)] + self[(j, i)]) * half;
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[T]) -> T {
        dot(x, &self.matvec(x))
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| U::c(x.as_f64())).collect(),
        }
    }

    /// Symmetric eigendecomposition. The matrix is symmetrized first.
    pub fn sym_eigen(&self) -> SymmetricEigen<T> {
        SymmetricEigen::new(self)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn norm1<T: Scalar>(a: &[T]) -> T {
    a.iter().map(|x| x.abs()).sum()
}

/// `y += a * x`
#[inline]
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale<T: Scalar>(s: T, x: &[T]) -> Vec<T> {
    x.iter().map(|&v| v * s).collect()
}

/// Eigenpairs `A = V diag(values) V^T` of a symmetric matrix. Column `j` of
/// `vectors` is the eigenvector for `values[j]`; values are ascending.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    pub fn new(a: &Matrix<T>) -> Self {
        assert!(a.is_square(), "eigendecomposition of a non-square matrix");
        let n = a.nrows();
        let mut m = a.clone();
        m.symmetrize();
        let mut v = Matrix::identity(n);
        let scale = m.frobenius();
        if n > 1 && scale > T::zero() {
            let limit = T::epsilon() * T::epsilon() * scale * scale;
            for _sweep in 0..64 {
                let mut off = T::zero();
                for p in 0..n {
                    for q in (p + 1)..n {
                        off += m[(p, q)] * m[(p, q)];
                    }
                }
                if off <= limit {
                    break;
                }
                for p in 0..n {
                    for q in (p + 1)..n {
                        jacobi_rotate(&mut m, &mut v, p, q);
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| m[(i, i)]).collect();
        let mut vectors = Matrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            for r in 0..n {
                vectors[(r, dst)] = v[(r, src)];
            }
        }
        Self { values, vectors }
    }

    pub fn min(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn max(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }

    /// `V diag(f(values)) V^T`.
    pub fn map(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        let n = self.values.len();
        let fv: Vec<T> = self.values.iter().map(|&x| f(x)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = T::zero();
                for k in 0..n {
                    s += self.vectors[(i, k)] * fv[k] * self.vectors[(j, k)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

fn jacobi_rotate<T: Scalar>(m: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == T::zero() {
        return;
    }
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    let theta = (aqq - app) / (T::c(2.0) * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
    let t = if theta.is_infinite() { T::zero() } else { t };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;
    let n = m.nrows();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    m[(p, q)] = T::zero();
    m[(q, p)] = T::zero();
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix.
pub fn op_norm_psd<T: Scalar>(a: &Matrix<T>) -> T {
    a.sym_eigen().max().max(T::zero())
}

/// `(log det A, smallest eigenvalue)` for symmetric `A`; the log determinant
/// is only meaningful when the smallest eigenvalue is positive.
pub fn log_det_sym<T: Scalar>(a: &Matrix<T>) -> (T, T) {
    let e = a.sym_eigen();
    let ld = e.values.iter().map(|&x| x.ln()).sum();
    (ld, e.min())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_sym(n: usize, seed: u64) -> Matrix<f64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        for n in [1, 2, 5, 17, 40] {
            let a = sample_sym(n, n as u64);
            let e = a.sym_eigen();
            let back = e.map(|x| x);
            assert!(back.max_abs_diff(&a) < 1e-12, "n={n}");
            let vtv = e.vectors.transpose().matmul(&e.vectors);
            assert!(vtv.max_abs_diff(&Matrix::identity(n)) < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn diagonal_spectrum_is_exact() {
        let a = Matrix::diagonal(&[3.0, 1.0, 2.0]);
        let e = a.sym_eigen();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        let root = e.map(f64::sqrt);
        assert!((root[(0, 0)] - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn inverse_square_root_squares_to_inverse() {
        let g = sample_sym(6, 99);
        let h = g.matmul(&g.transpose()).add(&Matrix::identity(6));
        let e = h.sym_eigen();
        let r = e.map(|x| x.sqrt().recip());
        let prod = r.matmul(&h).matmul(&r);
        assert!(prod.max_abs_diff(&Matrix::identity(6)) < 1e-12);
    }

    #[test]
    fn outer_sum_and_products() {
        let v1 = [1.0, 2.0];
        let v2 = [0.0, 1.0];
        let m = Matrix::outer_sum(2, [(0.5, &v1[..]), (2.0, &v2[..])]);
        assert_eq!(m, Matrix::from_rows(&[[0.5, 1.0], [1.0, 4.0]]));
        assert_eq!(m.matvec(&[1.0, 0.0]), vec![0.5, 1.0]);
        assert_eq!(m.tmatvec(&[1.0, 1.0]), vec![1.5, 5.0]);
        assert_eq!(m.trace(), 4.5);
    }

    #[test]
    fn log_det_of_diagonal() {
        let (ld, min) = log_det_sym(&Matrix::diagonal(&[2.0, 4.0]));
        assert!((ld - 8f64.ln()).abs() < 1e-14);
        assert_eq!(min, 2.0);
    }

    #[test]
    fn single_precision_eigen() {
        let a: Matrix<f32> = sample_sym(8, 3).cast();
        let e = a.sym_eigen();
        assert!(e.map(|x| x).max_abs_diff(&a) < 1e-5);
    }
}
