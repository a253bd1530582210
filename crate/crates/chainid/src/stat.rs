//! Super-additive matrix statistics.
//!
//! A positive super-additive family assigns each symmetric positive definite
//! matrix a positive value such that `d(A + B) >= d(A) + d(B)` on the
//! positive semidefinite cone. Every statistic here satisfies that
//! inequality, which is what makes component ordering by conditional
//! covariance work: adding explained-parent variance can only increase the
//! score. Determinants are evaluated from log space; the permanent uses the
//! Ryser formula with Gray-code updates and is capped at dimension 14.

use std::fmt;
use std::str::FromStr;

use crate::cov::CovMatrix;
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;

/// Maximum dimension accepted by the permanent evaluator (2^dim terms).
pub const PERMANENT_DIM_CAP: usize = 14;

/// Members of the positive super-additive family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    /// Determinant.
    Determinant,
    /// Determinant to the power `1/dim` (Minkowski form).
    DetRoot,
    /// Trace (additive, the equality edge of the family).
    Trace,
    /// Single diagonal entry at a fixed position within the matrix.
    Diagonal(usize),
    /// Matrix permanent.
    Permanent,
    /// Product of the diagonal entries.
    Hadamard,
}

impl Statistic {
    /// Evaluates the statistic on a covariance matrix.
    pub fn evaluate<T: Scalar>(self, cov: &CovMatrix<T>) -> Result<T> {
        let n = cov.dim();
        if n == 0 {
            return Err(Error::Argument("statistic of an empty matrix".into()));
        }
        match self {
            Statistic::Determinant => Ok(cov.log_det()?.exp()),
            Statistic::DetRoot => {
                Ok((cov.log_det()? / T::from_f64v(n as f64)).exp())
            }
            Statistic::Trace => {
                Ok((0..n).map(|i| cov.mat()[(i, i)]).sum())
            }
            Statistic::Diagonal(i) => {
                if i >= n {
                    return Err(Error::Argument(format!(
                        "diagonal index {i} out of range for dimension {n}"
                    )));
                }
                Ok(cov.mat()[(i, i)])
            }
            Statistic::Permanent => permanent(cov.mat()),
            Statistic::Hadamard => {
                Ok((0..n).fold(T::one(), |p, i| p * cov.mat()[(i, i)]))
            }
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Determinant => write!(f, "determinant"),
            Statistic::DetRoot => write!(f, "det_root"),
            Statistic::Trace => write!(f, "trace"),
            Statistic::Diagonal(i) => write!(f, "diagonal:{i}"),
            Statistic::Permanent => write!(f, "permanent"),
            Statistic::Hadamard => write!(f, "hadamard"),
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "determinant" | "det" => Ok(Statistic::Determinant),
            "det_root" => Ok(Statistic::DetRoot),
            "trace" => Ok(Statistic::Trace),
            "diagonal" => Ok(Statistic::Diagonal(0)),
            "permanent" => Ok(Statistic::Permanent),
            "hadamard" => Ok(Statistic::Hadamard),
            other => {
                if let Some(idx) = other.strip_prefix("diagonal:") {
                    let i = idx.parse::<usize>().map_err(|_| {
                        Error::Argument(format!("bad diagonal index in statistic '{other}'"))
                    })?;
                    return Ok(Statistic::Diagonal(i));
                }
                Err(Error::Argument(format!(
                    "unknown statistic '{other}' \
                     (expected determinant, det_root, trace, diagonal[:i], permanent, hadamard)"
                )))
            }
        }
    }
}

/// Matrix permanent by the Ryser formula with Gray-code row-sum updates.
///
/// `O(2^n * n)` time, guarded to `n <= 14`. Works on any square matrix; the
/// super-additive guarantees only apply on the positive semidefinite cone.
pub fn permanent<T: Scalar>(a: &Mat<T>) -> Result<T> {
    if !a.is_square() {
        return Err(Error::Argument("permanent requires a square matrix".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Err(Error::Argument("permanent of an empty matrix".into()));
    }
    if n > PERMANENT_DIM_CAP {
        return Err(Error::Capability(format!(
            "permanent dimension {n} exceeds cap {PERMANENT_DIM_CAP}"
        )));
    }

    let mut row_sums = vec![T::zero(); n];
    let mut total = T::zero();
    let mut gray: u32 = 0;
    let mut size: u32 = 0;
    for k in 1u32..(1u32 << n) {
        let next = k ^ (k >> 1);
        let diff = gray ^ next;
        let j = diff.trailing_zeros() as usize;
        if next & diff != 0 {
            for i in 0..n {
                row_sums[i] += a[(i, j)];
            }
            size += 1;
        } else {
            for i in 0..n {
                row_sums[i] -= a[(i, j)];
            }
            size -= 1;
        }
        gray = next;
        let prod = row_sums.iter().copied().fold(T::one(), |p, x| p * x);
        if size.is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n.is_multiple_of(2) {
        Ok(total)
    } else {
        Ok(-total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov(entries: &[f64], labels: &[usize]) -> CovMatrix<f64> {
        let n = labels.len();
        let mat = Mat::from_row_major(n, n, entries).unwrap();
        CovMatrix::new(mat, labels.to_vec()).unwrap()
    }

    #[test]
    fn permanent_identity_is_one() {
        for n in 1..=5 {
            let m = Mat::<f64>::identity(n);
            assert_eq!(permanent(&m).unwrap(), 1.0);
        }
    }

    #[test]
    fn permanent_2x2_closed_form() {
        let m = Mat::from_row_major(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(permanent(&m).unwrap(), 1.0 * 4.0 + 2.0 * 3.0);
    }

    #[test]
    fn permanent_3x3_closed_form() {
        // sum over all 6 permutations of row picks
        let m = Mat::from_row_major(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]).unwrap();
        let expected: f64 = 1.0 * 5.0 * 9.0
            + 1.0 * 6.0 * 8.0
            + 2.0 * 4.0 * 9.0
            + 2.0 * 6.0 * 7.0
            + 3.0 * 4.0 * 8.0
            + 3.0 * 5.0 * 7.0;
        assert!((permanent(&m).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn permanent_all_ones_is_factorial() {
        for n in 1..=8usize {
            let m = Mat::from_fn(n, n, |_, _| 1.0f64);
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            let p = permanent(&m).unwrap();
            assert!((p - fact).abs() < 1e-9 * fact, "n={n}: {p} vs {fact}");
        }
    }

    #[test]
    fn permanent_cap_enforced() {
        let m = Mat::<f64>::identity(PERMANENT_DIM_CAP + 1);
        assert!(matches!(permanent(&m), Err(Error::Capability(_))));
    }

    #[test]
    fn statistics_on_diagonal_matrix() {
        let c = cov(&[2.0, 0.0, 0.0, 8.0], &[0, 1]);
        assert!((Statistic::Determinant.evaluate(&c).unwrap() - 16.0).abs() < 1e-12);
        assert!((Statistic::DetRoot.evaluate(&c).unwrap() - 4.0).abs() < 1e-12);
        assert!((Statistic::Trace.evaluate(&c).unwrap() - 10.0).abs() < 1e-12);
        assert!((Statistic::Diagonal(1).evaluate(&c).unwrap() - 8.0).abs() < 1e-12);
        assert!((Statistic::Permanent.evaluate(&c).unwrap() - 16.0).abs() < 1e-12);
        assert!((Statistic::Hadamard.evaluate(&c).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_out_of_range_is_rejected() {
        let c = cov(&[1.0], &[0]);
        assert!(Statistic::Diagonal(1).evaluate(&c).is_err());
    }

    #[test]
    fn parse_and_display_roundtrip() {
        for s in [
            "determinant",
            "det_root",
            "trace",
            "diagonal:3",
            "permanent",
            "hadamard",
        ] {
            let stat: Statistic = s.parse().unwrap();
            assert_eq!(stat.to_string(), s);
        }
        assert_eq!("diagonal".parse::<Statistic>().unwrap(), Statistic::Diagonal(0));
        assert!("resolvent".parse::<Statistic>().is_err());
    }

    #[test]
    fn super_additivity_spot_check() {
        // A, B positive definite: d(A+B) >= d(A) + d(B)
        let a = cov(&[2.0, 0.4, 0.4, 1.0], &[0, 1]);
        let b = cov(&[1.5, -0.2, -0.2, 2.5], &[0, 1]);
        let sum = cov(
            &[3.5, 0.2, 0.2, 3.5],
            &[0, 1],
        );
        for stat in [
            Statistic::Determinant,
            Statistic::DetRoot,
            Statistic::Trace,
            Statistic::Diagonal(0),
            Statistic::Permanent,
            Statistic::Hadamard,
        ] {
            let lhs = stat.evaluate(&sum).unwrap();
            let rhs = stat.evaluate(&a).unwrap() + stat.evaluate(&b).unwrap();
            assert!(lhs >= rhs - 1e-12, "{stat}: {lhs} < {rhs}");
        }
    }
}
