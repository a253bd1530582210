//! Labeled covariance matrices and Gaussian conditioning.
//!
//! [`CovMatrix`] pairs a symmetric positive definite matrix with the variable
//! labels its rows describe, so submatrices and conditionals keep speaking
//! the caller's vertex language. Conditioning is the Schur complement
//! `S_BB - S_BA S_AA^{-1} S_AB`, which for Gaussians equals the conditional
//! covariance regardless of the conditioning value. Determinants are only
//! ever handled in log space through Cholesky pivots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;

/// Symmetric positive definite covariance over labeled variables.
///
/// Construction enforces the two library-wide matrix gates: symmetry within
/// relative tolerance and positive definiteness by eigenvalue ratio.
/// Derived matrices (submatrices, Schur complements) inherit definiteness
/// mathematically and skip the eigenvalue re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix<T> {
    labels: Vec<usize>,
    mat: Mat<T>,
}

impl<T: Scalar> CovMatrix<T> {
    /// Validates symmetry and positive definiteness, then takes ownership.
    pub fn new(mat: Mat<T>, labels: Vec<usize>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Argument(format!(
                "covariance must be square, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        if labels.len() != mat.rows() {
            return Err(Error::Argument(format!(
                "{} labels for a {}-dimensional covariance",
                labels.len(),
                mat.rows()
            )));
        }
        let mut seen = labels.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != labels.len() {
            return Err(Error::Argument("duplicate variable labels".into()));
        }

        let scale = mat.max_abs();
        let (dev, i, j) = mat.max_asymmetry();
        if dev > T::symmetry_tol() * scale {
            return Err(Error::NotSymmetric {
                i,
                j,
                deviation: dev.to_f64v(),
                tol: T::symmetry_tol().to_f64v(),
            });
        }

        if mat.rows() > 0 {
            let eig = mat.sym_eigenvalues();
            let min = eig[0];
            let max = eig[eig.len() - 1];
            if !(max > T::zero() && min > T::pd_ratio_tol() * max) {
                let ratio = if max > T::zero() { min / max } else { min };
                return Err(Error::NotPositiveDefinite {
                    ratio: ratio.to_f64v(),
                    tol: T::pd_ratio_tol().to_f64v(),
                });
            }
        }

        Ok(CovMatrix { mat, labels })
    }

    /// Construction for matrices that are positive definite by derivation;
    /// skips the eigenvalue gate but keeps every other invariant.
    pub(crate) fn from_parts_unchecked(mat: Mat<T>, labels: Vec<usize>) -> Self {
        debug_assert_eq!(mat.rows(), labels.len());
        CovMatrix { mat, labels }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn mat(&self) -> &Mat<T> {
        &self.mat
    }

    /// Matrix position of a label, if present.
    pub fn position(&self, label: usize) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    fn positions(&self, labels: &[usize]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|&l| {
                self.position(l)
                    .ok_or_else(|| Error::Argument(format!("unknown variable label {l}")))
            })
            .collect()
    }

    /// Principal submatrix on the given labels, in the given order.
    pub fn submatrix(&self, labels: &[usize]) -> Result<CovMatrix<T>> {
        let pos = self.positions(labels)?;
        let mut dedup = pos.clone();
        dedup.sort_unstable();
        dedup.dedup();
        if dedup.len() != pos.len() {
            return Err(Error::Argument("duplicate labels in submatrix".into()));
        }
        Ok(CovMatrix::from_parts_unchecked(
            self.mat.principal_submatrix(&pos),
            labels.to_vec(),
        ))
    }

    /// Conditional covariance of the remaining variables given `given`.
    ///
    /// Computes the Schur complement over the conditioning block. The result
    /// keeps the original label order of the remaining variables. Errors when
    /// `given` contains unknown labels, when it covers every variable, or when
    /// the conditioning block is numerically singular.
    pub fn conditional_cov(&self, given: &[usize]) -> Result<CovMatrix<T>> {
        let a_pos = self.positions(given)?;
        let mut dedup = a_pos.clone();
        dedup.sort_unstable();
        dedup.dedup();
        if dedup.len() != a_pos.len() {
            return Err(Error::Argument("duplicate labels in conditioning set".into()));
        }
        if a_pos.len() == self.dim() {
            return Err(Error::Argument(
                "conditioning on every variable leaves nothing to describe".into(),
            ));
        }
        let b_pos: Vec<usize> = (0..self.dim()).filter(|p| !a_pos.contains(p)).collect();
        let b_labels: Vec<usize> = b_pos.iter().map(|&p| self.labels[p]).collect();

        if a_pos.is_empty() {
            return Ok(CovMatrix::from_parts_unchecked(
                self.mat.principal_submatrix(&b_pos),
                b_labels,
            ));
        }

        let s_bb = self.mat.principal_submatrix(&b_pos);
        let s_ba = self.mat.block(&b_pos, &a_pos);
        let s_aa = self.mat.principal_submatrix(&a_pos);
        // W = S_AA^{-1} S_AB, so the complement is S_BB - S_BA W
        let w = s_aa.solve_spd(&s_ba.transpose()).map_err(|_| {
            Error::SingularBlock {
                block: given.to_vec(),
            }
        })?;
        let schur = s_bb.sub(&s_ba.matmul(&w));
        // enforce exact symmetry lost to rounding
        let sym = Mat::from_fn(schur.rows(), schur.cols(), |i, j| {
            (schur[(i, j)] + schur[(j, i)]) * T::from_f64v(0.5)
        });
        Ok(CovMatrix::from_parts_unchecked(sym, b_labels))
    }

    /// Log-determinant via Cholesky pivots.
    pub fn log_det(&self) -> Result<T> {
        self.mat.log_det()
    }

    /// Inverse matrix (precision), labels preserved.
    pub fn precision(&self) -> Result<Mat<T>> {
        self.mat.inverse_spd()
    }

    /// Determinant factorization residual over a conditioning block:
    /// `|log det(S) - log det(S_AA) - log det(S_{B|A})|`.
    ///
    /// Zero in exact arithmetic for any split; the returned residual is the
    /// numerical witness.
    pub fn factorization_residual(&self, block: &[usize]) -> Result<T> {
        if block.is_empty() || block.len() == self.dim() {
            return Err(Error::Argument(
                "factorization block must be a non-empty proper subset".into(),
            ));
        }
        let total = self.log_det()?;
        let block_part = self.submatrix(block)?.log_det()?;
        let schur_part = self.conditional_cov(block)?.log_det()?;
        Ok((total - block_part - schur_part).abs())
    }

    /// Residual of the conditional covariance decomposition on a disjoint
    /// triple: `Cov(X|Y)` against `Cov(X|Y,Z) + Cov_Z(E[X|Y,Z] | Y)`.
    ///
    /// For Gaussians both sides are closed-form in the joint covariance: the
    /// second term is `A_Z Cov(Z|Y) A_Z^T` with `A` the regression matrix of
    /// `X` on `(Y, Z)`. `Y` may be empty; `X` must not be.
    pub fn conditional_covariance_law_residual(
        &self,
        x: &[usize],
        y: &[usize],
        z: &[usize],
    ) -> Result<T> {
        if x.is_empty() {
            return Err(Error::Argument("target set must be non-empty".into()));
        }
        let mut all: Vec<usize> = Vec::new();
        all.extend_from_slice(x);
        all.extend_from_slice(y);
        all.extend_from_slice(z);
        let mut dedup = all.clone();
        dedup.sort_unstable();
        dedup.dedup();
        if dedup.len() != all.len() {
            return Err(Error::Argument("triple sets must be disjoint".into()));
        }

        let px = self.positions(x)?;
        let py = self.positions(y)?;
        let pz = self.positions(z)?;
        let pyz: Vec<usize> = py.iter().chain(pz.iter()).copied().collect();

        let s_xx = self.mat.principal_submatrix(&px);

        // left side: Cov(X | Y)
        let lhs = if py.is_empty() {
            s_xx.clone()
        } else {
            let s_xy = self.mat.block(&px, &py);
            let s_yy = self.mat.principal_submatrix(&py);
            let w = s_yy.solve_spd(&s_xy.transpose())?;
            s_xx.sub(&s_xy.matmul(&w))
        };

        // first term: Cov(X | Y, Z)
        let (term1, a) = if pyz.is_empty() {
            (s_xx.clone(), Mat::zeros(px.len(), 0))
        } else {
            let s_x_yz = self.mat.block(&px, &pyz);
            let s_yz = self.mat.principal_submatrix(&pyz);
            let w = s_yz.solve_spd(&s_x_yz.transpose())?;
            (s_xx.sub(&s_x_yz.matmul(&w)), w.transpose())
        };

        // second term: A_Z Cov(Z|Y) A_Z^T, the covariance contributed by the
        // regression response to Z beyond Y
        let term2 = if pz.is_empty() {
            Mat::zeros(px.len(), px.len())
        } else {
            let a_z = Mat::from_fn(px.len(), pz.len(), |i, j| a[(i, py.len() + j)]);
            let cov_z_given_y = if py.is_empty() {
                self.mat.principal_submatrix(&pz)
            } else {
                let s_zz = self.mat.principal_submatrix(&pz);
                let s_zy = self.mat.block(&pz, &py);
                let s_yy = self.mat.principal_submatrix(&py);
                let w = s_yy.solve_spd(&s_zy.transpose())?;
                s_zz.sub(&s_zy.matmul(&w))
            };
            a_z.matmul(&cov_z_given_y).matmul(&a_z.transpose())
        };

        Ok(lhs.sub(&term1).sub(&term2).max_abs())
    }

    /// Serialization mirror.
    pub fn to_json(&self) -> CovJson {
        CovJson {
            dim: self.dim(),
            labels: self.labels.clone(),
            entries: self.mat.data().iter().map(|&x| x.to_f64v()).collect(),
        }
    }

    /// Import with full validation.
    pub fn from_json(j: &CovJson) -> Result<Self> {
        let entries: Vec<T> = j.entries.iter().map(|&x| T::from_f64v(x)).collect();
        let mat = Mat::from_row_major(j.dim, j.dim, &entries)?;
        CovMatrix::new(mat, j.labels.clone())
    }
}

/// Row-major JSON form of a labeled covariance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovJson {
    pub dim: usize,
    pub labels: Vec<usize>,
    pub entries: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov3() -> CovMatrix<f64> {
        // hand-picked SPD matrix with distinct structure
        let mat = Mat::from_row_major(
            3,
            3,
            &[2.0, 0.6, 0.3, 0.6, 1.5, 0.4, 0.3, 0.4, 1.2],
        )
        .unwrap();
        CovMatrix::new(mat, vec![0, 1, 2]).unwrap()
    }

    #[test]
    fn rejects_asymmetry() {
        let mat = Mat::from_row_major(2, 2, &[1.0, 0.5, 0.4, 1.0]).unwrap();
        assert!(matches!(
            CovMatrix::new(mat, vec![0, 1]),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn rejects_indefinite() {
        let mat = Mat::from_row_major(2, 2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            CovMatrix::new(mat, vec![0, 1]),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn conditional_matches_hand_computed_2x2() {
        // Var(X1 | X0) = s11 - s01^2 / s00
        let c = cov3();
        let cond = c.conditional_cov(&[0]).unwrap();
        assert_eq!(cond.labels(), &[1, 2]);
        let expected_11 = 1.5 - 0.6 * 0.6 / 2.0;
        assert!((cond.mat()[(0, 0)] - expected_11).abs() < 1e-14);
        let expected_12 = 0.4 - 0.6 * 0.3 / 2.0;
        assert!((cond.mat()[(0, 1)] - expected_12).abs() < 1e-14);
    }

    #[test]
    fn conditional_on_empty_set_is_marginal() {
        let c = cov3();
        let cond = c.conditional_cov(&[]).unwrap();
        assert_eq!(cond.mat(), c.mat());
    }

    #[test]
    fn conditional_on_all_labels_is_rejected() {
        let c = cov3();
        assert!(matches!(
            c.conditional_cov(&[0, 1, 2]),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn factorization_residual_is_tiny() {
        let c = cov3();
        for block in [&[0usize][..], &[1], &[2], &[0, 1], &[0, 2], &[1, 2]] {
            let r = c.factorization_residual(block).unwrap();
            assert!(r < 1e-13, "residual {r} on block {block:?}");
        }
    }

    #[test]
    fn factorization_rejects_trivial_blocks() {
        let c = cov3();
        assert!(c.factorization_residual(&[]).is_err());
        assert!(c.factorization_residual(&[0, 1, 2]).is_err());
    }

    #[test]
    fn law_residual_vanishes_on_gaussian_triples() {
        let c = cov3();
        let r = c.conditional_covariance_law_residual(&[0], &[1], &[2]).unwrap();
        assert!(r < 1e-13, "residual {r}");
        let r = c.conditional_covariance_law_residual(&[0], &[], &[1, 2]).unwrap();
        assert!(r < 1e-13, "residual {r} with empty Y");
        let r = c.conditional_covariance_law_residual(&[0, 1], &[2], &[]).unwrap();
        assert!(r < 1e-13, "residual {r} with empty Z");
    }

    #[test]
    fn law_rejects_overlap() {
        let c = cov3();
        assert!(c.conditional_covariance_law_residual(&[0], &[0], &[1]).is_err());
    }

    #[test]
    fn json_roundtrip_preserves_entries() {
        let c = cov3();
        let j = c.to_json();
        let back = CovMatrix::<f64>::from_json(&j).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn f32_instantiation_works() {
        let mat = Mat::from_row_major(2, 2, &[2.0f32, 0.5, 0.5, 1.0]).unwrap();
        let c = CovMatrix::new(mat, vec![0, 1]).unwrap();
        let cond = c.conditional_cov(&[0]).unwrap();
        assert!((cond.mat()[(0, 0)] - (1.0 - 0.125f32)).abs() < 1e-6);
    }
}
