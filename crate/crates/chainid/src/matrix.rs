//! Dense matrix kernels for small symmetric problems.
//!
//! Everything here targets matrices of dimension at most a few dozen, so the
//! implementations favor exactness and determinism over blocking or SIMD:
//! Cholesky factorization for solves and log-determinants, cyclic Jacobi for
//! symmetric eigenvalues, and plain triple-loop products. All routines are
//! generic over [`Scalar`].

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds from a row-major slice; length must equal `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: &[T]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Argument(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Mat {
            rows,
            cols,
            data: data.to_vec(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, s: T) -> Mat<T> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * s)
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    /// Largest absolute asymmetry together with its position.
    pub fn max_asymmetry(&self) -> (T, usize, usize) {
        let mut worst = (T::zero(), 0, 0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let dev = (self[(i, j)] - self[(j, i)]).abs();
                if dev > worst.0 {
                    worst = (dev, i, j);
                }
            }
        }
        worst
    }

    /// Principal submatrix on `idx` (rows and columns alike, in given order).
    pub fn principal_submatrix(&self, idx: &[usize]) -> Mat<T> {
        Mat::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    /// Rectangular block with the given row and column index sets.
    pub fn block(&self, row_idx: &[usize], col_idx: &[usize]) -> Mat<T> {
        Mat::from_fn(row_idx.len(), col_idx.len(), |i, j| {
            self[(row_idx[i], col_idx[j])]
        })
    }

    /// Lower-triangular Cholesky factor `L` with `L L^T = self`.
    ///
    /// Fails on a non-positive pivot, which is the factorization-level signal
    /// that the matrix is not positive definite.
    pub fn cholesky(&self) -> Result<Mat<T>> {
        assert!(self.is_square(), "cholesky requires a square matrix");
        let n = self.rows;
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self[(i, j)];
                for k in 0..j {
                    sum -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if sum <= T::zero() {
                        return Err(Error::NotPositiveDefinite {
                            ratio: sum.to_f64v(),
                            tol: 0.0,
                        });
                    }
                    l[(i, j)] = sum.sqrt();
                } else {
                    l[(i, j)] = sum / l[(j, j)];
                }
            }
        }
        Ok(l)
    }

    /// Log-determinant through the Cholesky pivots: `2 * sum(log L_ii)`.
    ///
    /// Never forms the raw determinant, so it is stable across the full
    /// supported dimension range. The 0x0 matrix has log-determinant 0.
    pub fn log_det(&self) -> Result<T> {
        if self.rows == 0 {
            return Ok(T::zero());
        }
        let l = self.cholesky()?;
        let mut acc = T::zero();
        for i in 0..self.rows {
            acc += l[(i, i)].ln();
        }
        Ok(acc + acc)
    }

    /// Solves `self * X = B` for symmetric positive definite `self`.
    pub fn solve_spd(&self, b: &Mat<T>) -> Result<Mat<T>> {
        assert_eq!(self.rows, b.rows, "dimension mismatch in solve");
        let l = self.cholesky()?;
        let n = self.rows;
        let mut x = b.clone();
        // forward: L y = b
        for col in 0..x.cols {
            for i in 0..n {
                let mut sum = x[(i, col)];
                for k in 0..i {
                    sum -= l[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = sum / l[(i, i)];
            }
            // backward: L^T x = y
            for i in (0..n).rev() {
                let mut sum = x[(i, col)];
                for k in (i + 1)..n {
                    sum -= l[(k, i)] * x[(k, col)];
                }
                x[(i, col)] = sum / l[(i, i)];
            }
        }
        Ok(x)
    }

    /// Inverse of a symmetric positive definite matrix.
    pub fn inverse_spd(&self) -> Result<Mat<T>> {
        self.solve_spd(&Mat::identity(self.rows))
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi, ascending.
    ///
    /// Operates on a copy; the input is only read. Accurate to a small
    /// multiple of machine epsilon relative to the spectral radius, which is
    /// what the positive-definiteness ratio test needs.
    pub fn sym_eigenvalues(&self) -> Vec<T> {
        assert!(self.is_square());
        let n = self.rows;
        if n == 0 {
            return Vec::new();
        }
        if n == 1 {
            return vec![self[(0, 0)]];
        }
        let mut a = self.clone();
        let eps = T::epsilon();
        let half = T::from_f64v(0.5);
        for _sweep in 0..64 {
            let mut off = T::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            let mut diag = T::zero();
            for i in 0..n {
                diag += a[(i, i)] * a[(i, i)];
            }
            if off.sqrt() <= eps * (diag.sqrt() + off.sqrt()) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= eps * (a[(p, p)].abs() + a[(q, q)].abs()) * half {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (apq + apq);
                    let t = {
                        let s = if theta >= T::zero() { T::one() } else { -T::one() };
                        s / (theta.abs() + (theta * theta + T::one()).sqrt())
                    };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    // rotate rows/columns p and q
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
        eig
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}
