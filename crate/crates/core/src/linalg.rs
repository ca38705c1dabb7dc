//! Small dense matrices and the symmetric eigensolver used for PSD
//! validation, clamping and covariance square roots.
//!
//! State dimensions in jump linear systems are small (a handful at most),
//! so a row-major `Vec` matrix with a cyclic Jacobi eigensolver covers
//! every need of this crate without pulling in a linear-algebra stack.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, cast, lossy};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn diagonal(entries: &[T]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row slices. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    what: "matrix row length".into(),
                    expected: ncols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn add_assign(&mut self, rhs: &Self) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimensions must agree");
        let mut out = vec![T::zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = T::zero();
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// `A · S · Aᵀ` for square `S` with matching dimension.
    pub fn congruence(&self, s: &Self) -> Self {
        self.mul(s).mul(&self.transpose())
    }

    pub fn trace(&self) -> T {
        assert!(self.is_square(), "trace needs a square matrix");
        let mut acc = T::zero();
        for i in 0..self.rows {
            acc += self[(i, i)];
        }
        acc
    }

    /// Largest `|a_ij - a_ji|` over the strict upper triangle.
    pub fn max_asymmetry(&self) -> T {
        assert!(self.is_square());
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        assert!(self.is_square());
        let half = cast::<T>(0.5);
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = (self[(i, j)] + self[(j, i)]) * half;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }
}

impl<T: Scalar> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Squared Euclidean norm.
pub fn norm_sq<T: Scalar>(v: &[T]) -> T {
    dot(v, v)
}

/// Outer product `u · vᵀ`.
pub fn outer<T: Scalar>(u: &[T], v: &[T]) -> Matrix<T> {
    let mut out = Matrix::zeros(u.len(), v.len());
    for (i, &ui) in u.iter().enumerate() {
        for (j, &vj) in v.iter().enumerate() {
            out[(i, j)] = ui * vj;
        }
    }
    out
}

/// Eigendecomposition of a symmetric matrix: `A = V · diag(values) · Vᵀ`
/// with orthonormal columns in `vectors`.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

const MAX_JACOBI_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Deterministic (fixed sweep order), adequate for the tiny matrices this
/// crate works with. The input is assumed symmetric; only the values
/// actually stored are used, so feed it a symmetrized matrix.
pub fn sym_eigen<T: Scalar>(a: &Matrix<T>) -> SymEigen<T> {
    assert!(a.is_square(), "eigendecomposition needs a square matrix");
    let n = a.rows();
    let mut a = a.clone();
    let mut v = Matrix::identity(n);
    if n <= 1 {
        return SymEigen {
            values: (0..n).map(|i| a[(i, i)]).collect(),
            vectors: v,
        };
    }

    let tol = {
        // Convergence when the off-diagonal mass is negligible next to the
        // matrix scale.
        let scale = a.max_abs().max(T::one());
        T::epsilon() * scale * cast::<T>(n as f64)
    };

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= tol {
            break;
        }

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let two = cast::<T>(2.0);
                let theta = (aqq - app) / (two * apq);
                // tan of the rotation angle; series form for huge theta to
                // avoid overflow in theta^2.
                let t = if theta.abs() > T::one() / T::epsilon() {
                    (two * theta).recip()
                } else {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (T::one() + theta * theta).sqrt())
                };
                let c = (T::one() + t * t).sqrt().recip();
                let s = t * c;
                let tau = s / (T::one() + c);

                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a[(i, p)];
                        let aiq = a[(i, q)];
                        let new_ip = aip - s * (aiq + tau * aip);
                        let new_iq = aiq + s * (aip - tau * aiq);
                        a[(i, p)] = new_ip;
                        a[(p, i)] = new_ip;
                        a[(i, q)] = new_iq;
                        a[(q, i)] = new_iq;
                    }
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip - s * (viq + tau * vip);
                    v[(i, q)] = viq + s * (vip - tau * viq);
                }
            }
        }
    }

    SymEigen {
        values: (0..n).map(|i| a[(i, i)]).collect(),
        vectors: v,
    }
}

/// Validates a symmetric matrix as positive semidefinite under the clamp
/// policy: eigenvalues in `[floor, 0)` are clamped to zero (the matrix is
/// rebuilt), anything below the floor is an error. The floor scales with
/// the matrix magnitude so that round-off from congruence transforms of
/// large covariances is treated the same as at unit scale.
///
/// Returns the (possibly rebuilt) matrix and the smallest eigenvalue seen.
pub fn clamp_psd<T: Scalar>(m: &Matrix<T>) -> Result<(Matrix<T>, T)> {
    let eig = sym_eigen(m);
    let min_eig = eig
        .values
        .iter()
        .fold(T::infinity(), |acc, &v| acc.min(v));
    let scale = eig
        .values
        .iter()
        .fold(T::one(), |acc, &v| acc.max(v.abs()));
    let floor = T::EIG_FLOOR * scale;
    if min_eig < floor {
        return Err(Error::CovarianceNotPsd {
            min_eigenvalue: lossy(min_eig),
            floor: lossy(floor),
        });
    }
    if min_eig >= T::zero() {
        return Ok((m.clone(), min_eig));
    }
    let clamped: Vec<T> = eig.values.iter().map(|&v| v.max(T::zero())).collect();
    Ok((rebuild(&eig.vectors, &clamped), min_eig))
}

/// Factor `F` with `F · Fᵀ = M` for a PSD matrix, via the eigendecomposition
/// with negative round-off eigenvalues clamped to zero. Suitable for
/// sampling from degenerate covariances.
pub fn psd_sqrt_factor<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    let eig = sym_eigen(m);
    let n = eig.values.len();
    let mut f = Matrix::zeros(n, n);
    for j in 0..n {
        let root = eig.values[j].max(T::zero()).sqrt();
        for i in 0..n {
            f[(i, j)] = eig.vectors[(i, j)] * root;
        }
    }
    f
}

fn rebuild<T: Scalar>(vectors: &Matrix<T>, values: &[T]) -> Matrix<T> {
    let n = values.len();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = T::zero();
            for (l, &lambda) in values.iter().enumerate() {
                acc += vectors[(i, l)] * lambda * vectors[(j, l)];
            }
            out[(i, j)] = acc;
            out[(j, i)] = acc;
        }
    }
    out
}
