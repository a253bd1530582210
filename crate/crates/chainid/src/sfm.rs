//! Submodular set-function minimization.
//!
//! Two engines behind one result type: exhaustive enumeration (the reference,
//! capped at 16 ground elements) and the Fujishige–Wolfe minimum-norm-point
//! algorithm, which scales past enumeration range. Both break ties toward the
//! smallest set, then lexicographically, so results are deterministic and
//! method-independent on exact ties.
//!
//! The minimum-norm-point solver certifies its answer: for `x*` in the base
//! polytope, `sum_v min(x*_v, 0)` lower-bounds every set value, so
//! `F(S_best) - sum_v min(x*_v, 0)` bounds the suboptimality of `S_best`.
//! That quantity is the `certificate_gap` and drives termination.

use crate::cov::CovMatrix;
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;

/// Ground-set cap for exhaustive enumeration.
pub const BRUTE_FORCE_CAP: usize = 20;

/// Set function oracle over ground set `0..ground_size()`.
///
/// `eval` must be a function of the subset only (order-insensitive); callers
/// pass strictly increasing indices. Minimization guarantees require the
/// function to be submodular, but evaluation itself does not check that.
pub trait SubmodularOracle<T: Scalar> {
    fn ground_size(&self) -> usize;

    fn eval(&self, subset: &[usize]) -> T;

    /// Values of the nested prefixes of `order`: `out[i] = eval(order[..=i])`.
    ///
    /// The default re-evaluates each prefix; implementations with incremental
    /// structure (growing factorizations) should override.
    fn eval_prefix_chain(&self, order: &[usize]) -> Vec<T> {
        let mut out = Vec::with_capacity(order.len());
        let mut prefix: Vec<usize> = Vec::with_capacity(order.len());
        for &v in order {
            prefix.push(v);
            let mut sorted = prefix.clone();
            sorted.sort_unstable();
            out.push(self.eval(&sorted));
        }
        out
    }
}

/// `F(S) = log det(M[S, S])`, submodular for symmetric positive definite `M`.
///
/// Ground elements are matrix positions of the backing covariance. Empty
/// subsets evaluate to zero, so the oracle is normalized by construction.
pub struct LogDetOracle<'a, T> {
    mat: &'a Mat<T>,
}

impl<'a, T: Scalar> LogDetOracle<'a, T> {
    pub fn new(cov: &'a CovMatrix<T>) -> Self {
        LogDetOracle { mat: cov.mat() }
    }
}

impl<T: Scalar> SubmodularOracle<T> for LogDetOracle<'_, T> {
    fn ground_size(&self) -> usize {
        self.mat.rows()
    }

    fn eval(&self, subset: &[usize]) -> T {
        self.mat
            .principal_submatrix(subset)
            .log_det()
            .expect("principal submatrix of a positive definite matrix is positive definite")
    }

    /// One growing Cholesky factorization covers the whole prefix chain.
    fn eval_prefix_chain(&self, order: &[usize]) -> Vec<T> {
        let n = order.len();
        let mut l = vec![T::zero(); n * n];
        let mut log_det = T::zero();
        let mut out = Vec::with_capacity(n);
        for (m, &v) in order.iter().enumerate() {
            for j in 0..=m {
                let mut sum = self.mat[(v, order[j])];
                for k in 0..j {
                    sum -= l[m * n + k] * l[j * n + k];
                }
                if j == m {
                    assert!(
                        sum > T::zero(),
                        "non-positive pivot while factorizing a positive definite matrix"
                    );
                    let p = sum.sqrt();
                    l[m * n + m] = p;
                    log_det += p.ln() + p.ln();
                } else {
                    l[m * n + j] = sum / l[j * n + j];
                }
            }
            out.push(log_det);
        }
        out
    }
}

/// Modular function `F(S) = sum of weights over S`; the degenerate member of
/// the submodular family, useful as a worked reference in tests and docs.
pub struct ModularOracle<T> {
    pub weights: Vec<T>,
}

impl<T: Scalar> SubmodularOracle<T> for ModularOracle<T> {
    fn ground_size(&self) -> usize {
        self.weights.len()
    }

    fn eval(&self, subset: &[usize]) -> T {
        subset.iter().map(|&v| self.weights[v]).sum()
    }
}

/// Minimization engine selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfmMethod {
    BruteForce,
    MinNormPoint,
}

impl std::str::FromStr for SfmMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" | "brute_force" => Ok(SfmMethod::BruteForce),
            "mnp" | "min_norm_point" => Ok(SfmMethod::MinNormPoint),
            other => Err(Error::Argument(format!(
                "unknown sfm method '{other}' (expected brute or mnp)"
            ))),
        }
    }
}

impl std::fmt::Display for SfmMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SfmMethod::BruteForce => write!(f, "brute"),
            SfmMethod::MinNormPoint => write!(f, "mnp"),
        }
    }
}

/// Outcome of a minimization: the set, its raw oracle value, the work spent,
/// and the duality-gap certificate (zero for exhaustive enumeration).
#[derive(Debug, Clone)]
pub struct SfmResult<T> {
    pub minimizer: Vec<usize>,
    pub value: T,
    pub iterations: usize,
    pub certificate_gap: T,
}

/// `(cardinality, lexicographic)` order on sorted subsets; the library-wide
/// tie-break.
fn subset_precedes(a: &[usize], b: &[usize]) -> bool {
    a.len() < b.len() || (a.len() == b.len() && a < b)
}

/// Exact minimization by enumerating all `2^k` subsets.
///
/// With `require_nonempty` the empty set is excluded from the search rather
/// than penalized. Errors when the ground set exceeds [`BRUTE_FORCE_CAP`].
pub fn brute_force_min<T: Scalar, O: SubmodularOracle<T>>(
    oracle: &O,
    require_nonempty: bool,
) -> Result<SfmResult<T>> {
    let k = oracle.ground_size();
    if k > BRUTE_FORCE_CAP {
        return Err(Error::Capability(format!(
            "ground set of {k} exceeds enumeration cap {BRUTE_FORCE_CAP}"
        )));
    }
    if k == 0 && require_nonempty {
        return Err(Error::Argument(
            "non-empty minimization over an empty ground set".into(),
        ));
    }

    let start: u64 = if require_nonempty { 1 } else { 0 };
    let mut best: Option<(Vec<usize>, T)> = None;
    let mut subset: Vec<usize> = Vec::with_capacity(k);
    let mut evals = 0usize;
    for mask in start..(1u64 << k) {
        subset.clear();
        let mut bits = mask;
        while bits != 0 {
            subset.push(bits.trailing_zeros() as usize);
            bits &= bits - 1;
        }
        let value = oracle.eval(&subset);
        evals += 1;
        let better = match &best {
            None => true,
            Some((s, v)) => value < *v || (value == *v && subset_precedes(&subset, s)),
        };
        if better {
            best = Some((subset.clone(), value));
        }
    }
    let (minimizer, value) = best.expect("at least one subset was evaluated");
    Ok(SfmResult {
        minimizer,
        value,
        iterations: evals,
        certificate_gap: T::zero(),
    })
}

/// Edmonds greedy: the base-polytope vertex minimizing `<direction, q>`.
///
/// Elements are ordered by ascending direction value (ties by index), and the
/// vertex collects the marginal gains along that order.
fn greedy_vertex<T: Scalar, O: SubmodularOracle<T>>(
    oracle: &O,
    offset: T,
    direction: &[T],
) -> Vec<T> {
    let k = direction.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        direction[a]
            .partial_cmp(&direction[b])
            .expect("finite direction")
            .then(a.cmp(&b))
    });
    let chain = oracle.eval_prefix_chain(&order);
    let mut q = vec![T::zero(); k];
    let mut prev = T::zero();
    for (i, &v) in order.iter().enumerate() {
        let value = chain[i] - offset;
        q[v] = value - prev;
        prev = value;
    }
    q
}

/// Best level set of `x` under the normalized oracle: sweeps the thresholds
/// given by the distinct coordinates of `x`, evaluating each candidate, and
/// returns the smallest value with the standard tie-break.
fn best_level_set<T: Scalar, O: SubmodularOracle<T>>(
    oracle: &O,
    offset: T,
    x: &[T],
) -> (Vec<usize>, T) {
    let k = x.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite point").then(a.cmp(&b)));

    let mut best_set: Vec<usize> = Vec::new();
    let mut best_val = T::zero(); // empty set under the normalized oracle
    let mut candidate: Vec<usize> = Vec::with_capacity(k);
    let mut i = 0;
    while i < k {
        let threshold = x[order[i]];
        while i < k && x[order[i]] == threshold {
            candidate.push(order[i]);
            i += 1;
        }
        let mut sorted = candidate.clone();
        sorted.sort_unstable();
        let value = oracle.eval(&sorted) - offset;
        if value < best_val || (value == best_val && subset_precedes(&sorted, &best_set)) {
            best_set = sorted;
            best_val = value;
        }
    }
    (best_set, best_val)
}

/// Upper-triangular factor `R` with `R^T R = Q^T Q + 1 1^T` over the active
/// vertex set `Q`; supports append, delete, and from-scratch rebuild. The
/// rank-one `1 1^T` shift makes the factor positive definite exactly while
/// the vertices stay affinely independent, which is the Wolfe invariant.
struct GramFactor<T> {
    r: Vec<Vec<T>>, // r[i][j], upper triangular: j >= i
}

impl<T: Scalar> GramFactor<T> {
    fn new() -> Self {
        GramFactor { r: Vec::new() }
    }

    fn size(&self) -> usize {
        self.r.len()
    }

    /// Appends a vertex with augmented inner products `g_i = <s_i, q> + 1`
    /// and `gg = <q, q> + 1`. Fails when the pivot collapses, signalling an
    /// affinely dependent vertex or lost conditioning.
    fn append(&mut self, g: &[T], gg: T) -> std::result::Result<(), ()> {
        let m = self.size();
        let mut col = vec![T::zero(); m + 1];
        for i in 0..m {
            let mut sum = g[i];
            for (rk, &ck) in self.r.iter().zip(&col).take(i) {
                sum -= rk[i] * ck;
            }
            col[i] = sum / self.r[i][i];
        }
        let mut rho2 = gg;
        for &c in col.iter().take(m) {
            rho2 -= c * c;
        }
        let floor = gg * T::epsilon() * T::epsilon() * T::from_f64v(100.0);
        if rho2.is_nan() || rho2 <= floor {
            return Err(());
        }
        col[m] = rho2.sqrt();
        for (i, row) in self.r.iter_mut().enumerate() {
            row.push(col[i]);
        }
        let mut last = vec![T::zero(); m + 1];
        last[m] = col[m];
        self.r.push(last);
        Ok(())
    }

    /// Deletes column `j` and restores triangularity with Givens rotations.
    fn delete(&mut self, j: usize) {
        let m = self.size();
        for row in self.r.iter_mut() {
            row.remove(j);
        }
        // rows j.. now carry a subdiagonal; rotate it away column by column
        for i in j..(m - 1) {
            let a = self.r[i][i];
            let b = self.r[i + 1][i];
            let h = (a * a + b * b).sqrt();
            if h == T::zero() {
                continue;
            }
            let (c, s) = (a / h, b / h);
            for col in i..(m - 1) {
                let x = self.r[i][col];
                let y = self.r[i + 1][col];
                self.r[i][col] = c * x + s * y;
                self.r[i + 1][col] = -s * x + c * y;
            }
        }
        self.r.pop();
    }

    /// Full rebuild from the vertex set; errors when the augmented Gram
    /// matrix is not numerically positive definite.
    fn rebuild(&mut self, points: &[Vec<T>]) -> std::result::Result<(), ()> {
        let m = points.len();
        let gram = Mat::from_fn(m, m, |i, j| {
            dot(&points[i], &points[j]) + T::one()
        });
        match gram.cholesky() {
            Ok(l) => {
                self.r = (0..m)
                    .map(|i| (0..m).map(|j| l[(j, i)]).collect())
                    .collect();
                Ok(())
            }
            Err(_) => Err(()),
        }
    }

    /// Solves `(Q^T Q + 1 1^T) alpha_hat = 1` and normalizes to the affine
    /// minimizer coefficients (they sum to one).
    fn affine_coefficients(&self) -> Vec<T> {
        let m = self.size();
        let mut y = vec![T::zero(); m];
        for i in 0..m {
            let mut sum = T::one();
            for (rk, &yk) in self.r.iter().zip(&y).take(i) {
                sum -= rk[i] * yk;
            }
            y[i] = sum / self.r[i][i];
        }
        let mut alpha = vec![T::zero(); m];
        for i in (0..m).rev() {
            let mut sum = y[i];
            for (&rik, &ak) in self.r[i][i + 1..].iter().zip(&alpha[i + 1..]) {
                sum -= rik * ak;
            }
            alpha[i] = sum / self.r[i][i];
        }
        let total: T = alpha.iter().copied().sum();
        alpha.iter().map(|&a| a / total).collect()
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Fujishige–Wolfe minimum-norm-point minimization.
///
/// Runs Wolfe's algorithm on the base polytope of the (internally
/// normalized) oracle, checking the duality gap after every major cycle and
/// stopping once it drops to `tolerance`. The returned minimizer comes from
/// a level-set sweep of the final point, so exact minima found early are
/// reported even before the norm itself converges. Hitting the major-cycle
/// cap (default `10 k^2`) with the gap still above tolerance is an error
/// carrying that residual gap.
pub fn min_norm_point<T: Scalar, O: SubmodularOracle<T>>(
    oracle: &O,
    tolerance: T,
    max_major_cycles: Option<usize>,
) -> Result<SfmResult<T>> {
    let k = oracle.ground_size();
    if k == 0 {
        return Ok(SfmResult {
            minimizer: Vec::new(),
            value: oracle.eval(&[]),
            iterations: 0,
            certificate_gap: T::zero(),
        });
    }
    let offset = oracle.eval(&[]);
    let cap = max_major_cycles.unwrap_or(10 * k * k);

    let mut points: Vec<Vec<T>> = Vec::new();
    let mut lambda: Vec<T> = Vec::new();
    let mut factor = GramFactor::new();
    let mut x = vec![T::zero(); k];

    // first vertex: greedy along the zero direction (identity order)
    let q0 = greedy_vertex(oracle, offset, &x);
    factor
        .append(&[], dot(&q0, &q0) + T::one())
        .expect("first vertex is always independent");
    points.push(q0.clone());
    lambda.push(T::one());
    x = q0;

    let mut iterations = 0usize;
    let mut scale = x.iter().fold(T::one(), |m, &v| m.max(v.abs()));

    loop {
        // primal-dual certificate at the current point
        let (best_set, best_val) = best_level_set(oracle, offset, &x);
        let lower: T = x
            .iter()
            .map(|&v| if v < T::zero() { v } else { T::zero() })
            .sum();
        let gap = (best_val - lower).max(T::zero());
        if gap <= tolerance {
            return Ok(SfmResult {
                value: oracle.eval(&best_set),
                minimizer: best_set,
                iterations,
                certificate_gap: gap,
            });
        }
        if iterations >= cap {
            return Err(Error::Convergence {
                gap: gap.to_f64v(),
            });
        }
        iterations += 1;

        let q = greedy_vertex(oracle, offset, &x);
        scale = q.iter().fold(scale, |m, &v| m.max(v.abs()));

        // Wolfe optimality: x is the minimum-norm point when no vertex
        // improves <x, q> below <x, x> (up to conditioning noise)
        let xx = dot(&x, &x);
        let xq = dot(&x, &q);
        let eps = T::epsilon() * T::from_f64v(256.0) * (scale * scale).max(T::one());
        let duplicate = points.iter().any(|p| p == &q);
        if xx - xq <= eps || duplicate {
            return Ok(SfmResult {
                value: oracle.eval(&best_set),
                minimizer: best_set,
                iterations,
                certificate_gap: gap,
            });
        }

        // append q to the active set
        let g: Vec<T> = points.iter().map(|p| dot(p, &q) + T::one()).collect();
        let gg = dot(&q, &q) + T::one();
        let appended = factor.append(&g, gg).is_ok()
            || (factor.rebuild(&points).is_ok() && factor.append(&g, gg).is_ok());
        if !appended {
            // affinely dependent vertex: no progress is possible
            return Ok(SfmResult {
                value: oracle.eval(&best_set),
                minimizer: best_set,
                iterations,
                certificate_gap: gap,
            });
        }
        points.push(q);
        lambda.push(T::zero());

        // minor cycles: move to the affine minimizer, deleting vertices that
        // leave the convex hull; each pass removes at least one vertex
        let mut minor_guard = 0usize;
        loop {
            minor_guard += 1;
            debug_assert!(minor_guard <= k + 3, "minor cycle failed to shrink");
            let alpha = factor.affine_coefficients();
            let interior_eps = T::epsilon() * T::from_f64v(16.0);
            if alpha.iter().all(|&a| a > interior_eps) {
                lambda = alpha;
                break;
            }
            // line search from lambda toward alpha until a coefficient hits zero
            let mut theta = T::one();
            for i in 0..alpha.len() {
                if alpha[i] < interior_eps {
                    let denom = lambda[i] - alpha[i];
                    if denom > T::zero() {
                        theta = theta.min(lambda[i] / denom);
                    }
                }
            }
            let theta = theta.max(T::zero()).min(T::one());
            let mut mu: Vec<T> = lambda
                .iter()
                .zip(&alpha)
                .map(|(&l, &a)| l + theta * (a - l))
                .collect();
            // delete every vertex whose coefficient collapsed
            let mut removed_any = false;
            let mut idx = 0;
            while idx < mu.len() {
                if mu[idx] <= interior_eps {
                    factor.delete(idx);
                    points.remove(idx);
                    mu.remove(idx);
                    removed_any = true;
                } else {
                    idx += 1;
                }
            }
            if !removed_any {
                // numerical stalemate: accept the clamped coefficients
                let total: T = mu.iter().copied().sum();
                lambda = mu.iter().map(|&m| m / total).collect();
                break;
            }
            let total: T = mu.iter().copied().sum();
            lambda = mu.iter().map(|&m| m / total).collect();
            if points.len() == 1 {
                break;
            }
        }

        // recompose x from the convex combination
        for v in x.iter_mut() {
            *v = T::zero();
        }
        for (p, &l) in points.iter().zip(&lambda) {
            for (xv, &pv) in x.iter_mut().zip(p) {
                *xv += l * pv;
            }
        }
    }
}

/// Minimization restricted to non-empty sets.
///
/// Enumeration enforces the constraint directly. The minimum-norm-point path
/// reduces to unconstrained runs: for each pinned element `v`, minimize the
/// contraction `T -> F(T + v) - F(v)` over the remaining ground set, add
/// `F(v)` back, and keep the best candidate across pins (value ties resolved
/// within `tolerance` by the standard subset tie-break).
pub fn min_nonempty<T: Scalar, O: SubmodularOracle<T>>(
    oracle: &O,
    tolerance: T,
    method: SfmMethod,
) -> Result<SfmResult<T>> {
    let k = oracle.ground_size();
    if k == 0 {
        return Err(Error::Argument(
            "non-empty minimization over an empty ground set".into(),
        ));
    }
    match method {
        SfmMethod::BruteForce => brute_force_min(oracle, true),
        SfmMethod::MinNormPoint => {
            let mut best: Option<(Vec<usize>, T)> = None;
            let mut iterations = 0usize;
            let mut lower_bound: Option<T> = None;
            for v in 0..k {
                let contraction = Contraction::new(oracle, v);
                let sub = min_norm_point(&contraction, tolerance, None)?;
                iterations += sub.iterations;
                let mut candidate: Vec<usize> =
                    sub.minimizer.iter().map(|&i| contraction.others[i]).collect();
                candidate.push(v);
                candidate.sort_unstable();
                let value = sub.value + contraction.base;
                let branch_lower = value - sub.certificate_gap;
                lower_bound = Some(match lower_bound {
                    None => branch_lower,
                    Some(lb) => lb.min(branch_lower),
                });
                let better = match &best {
                    None => true,
                    Some((s, bv)) => {
                        value < *bv - tolerance
                            || ((value - *bv).abs() <= tolerance && subset_precedes(&candidate, s))
                    }
                };
                if better {
                    best = Some((candidate, value));
                }
            }
            let (minimizer, _) = best.expect("ground set is non-empty");
            // report the direct oracle value, not the contraction's
            // reassembled one; keeps the two methods bitwise comparable
            let value = oracle.eval(&minimizer);
            let gap = (value - lower_bound.expect("at least one branch ran")).max(T::zero());
            Ok(SfmResult {
                minimizer,
                value,
                iterations,
                certificate_gap: gap,
            })
        }
    }
}

/// Contraction of an oracle onto sets containing a pinned element,
/// normalized to zero at the empty set.
struct Contraction<'a, T: Scalar, O: SubmodularOracle<T>> {
    inner: &'a O,
    pinned: usize,
    others: Vec<usize>,
    base: T,
}

impl<'a, T: Scalar, O: SubmodularOracle<T>> Contraction<'a, T, O> {
    fn new(inner: &'a O, pinned: usize) -> Self {
        let others: Vec<usize> =
            (0..inner.ground_size()).filter(|&i| i != pinned).collect();
        let base = inner.eval(&[pinned]);
        Contraction {
            inner,
            pinned,
            others,
            base,
        }
    }
}

impl<T: Scalar, O: SubmodularOracle<T>> SubmodularOracle<T> for Contraction<'_, T, O> {
    fn ground_size(&self) -> usize {
        self.others.len()
    }

    fn eval(&self, subset: &[usize]) -> T {
        let mut s: Vec<usize> = subset.iter().map(|&i| self.others[i]).collect();
        s.push(self.pinned);
        s.sort_unstable();
        self.inner.eval(&s) - self.base
    }

    fn eval_prefix_chain(&self, order: &[usize]) -> Vec<T> {
        let mut inner_order = Vec::with_capacity(order.len() + 1);
        inner_order.push(self.pinned);
        inner_order.extend(order.iter().map(|&i| self.others[i]));
        let chain = self.inner.eval_prefix_chain(&inner_order);
        let base = chain[0];
        chain[1..].iter().map(|&v| v - base).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Undirected cut function: number of edges crossing the subset boundary.
    struct CutOracle {
        n: usize,
        edges: Vec<(usize, usize)>,
    }

    impl SubmodularOracle<f64> for CutOracle {
        fn ground_size(&self) -> usize {
            self.n
        }

        fn eval(&self, subset: &[usize]) -> f64 {
            let inside = |v: usize| subset.binary_search(&v).is_ok();
            self.edges
                .iter()
                .filter(|&&(u, v)| inside(u) != inside(v))
                .count() as f64
        }
    }

    fn cov_from(entries: &[f64], n: usize) -> CovMatrix<f64> {
        let mat = Mat::from_row_major(n, n, entries).unwrap();
        CovMatrix::new(mat, (0..n).collect()).unwrap()
    }

    #[test]
    fn modular_positive_minimizes_at_empty_set() {
        let oracle = ModularOracle {
            weights: vec![0.5, 1.0, 2.0],
        };
        let brute = brute_force_min(&oracle, false).unwrap();
        assert!(brute.minimizer.is_empty());
        assert_eq!(brute.value, 0.0);
        let mnp = min_norm_point(&oracle, 1e-9, None).unwrap();
        assert!(mnp.minimizer.is_empty());
        assert!(mnp.certificate_gap <= 1e-9);
    }

    #[test]
    fn modular_mixed_signs_selects_negative_support() {
        let oracle = ModularOracle {
            weights: vec![0.5f64, -1.0, 2.0, -0.25],
        };
        let brute = brute_force_min(&oracle, false).unwrap();
        assert_eq!(brute.minimizer, vec![1, 3]);
        assert_eq!(brute.value, -1.25);
        let mnp = min_norm_point(&oracle, 1e-9, None).unwrap();
        assert_eq!(mnp.minimizer, vec![1, 3]);
        assert!((mnp.value - -1.25).abs() <= 1e-12);
    }

    #[test]
    fn nonempty_modular_positive_returns_cheapest_singleton() {
        let oracle = ModularOracle {
            weights: vec![0.5f64, 0.25, 2.0],
        };
        for method in [SfmMethod::BruteForce, SfmMethod::MinNormPoint] {
            let res = min_nonempty(&oracle, 1e-9, method).unwrap();
            assert_eq!(res.minimizer, vec![1], "{method:?}");
            assert!((res.value - 0.25).abs() <= 1e-12);
        }
    }

    #[test]
    fn tie_break_prefers_smaller_then_lexicographic() {
        // identical weights: every singleton ties; index 0 must win
        let oracle = ModularOracle {
            weights: vec![1.0, 1.0, 1.0],
        };
        for method in [SfmMethod::BruteForce, SfmMethod::MinNormPoint] {
            let res = min_nonempty(&oracle, 1e-9, method).unwrap();
            assert_eq!(res.minimizer, vec![0], "{method:?}");
        }
    }

    #[test]
    fn cut_function_agreement() {
        // path 0-1-2-3: global minima are the trivial cuts; non-empty
        // minimization must settle on the full set (0 edges cut, largest
        // value-tied set loses to none since empty is excluded; the
        // cardinality tie-break only sees value ties)
        let oracle = CutOracle {
            n: 4,
            edges: vec![(0, 1), (1, 2), (2, 3)],
        };
        let brute = brute_force_min(&oracle, true).unwrap();
        let mnp = min_nonempty(&oracle, 1e-9, SfmMethod::MinNormPoint).unwrap();
        assert_eq!(brute.value, 0.0);
        assert_eq!(brute.minimizer, vec![0, 1, 2, 3]);
        assert_eq!(mnp.minimizer, brute.minimizer);
    }

    #[test]
    fn log_det_identity_prefers_empty_then_first_singleton() {
        let cov = cov_from(
            &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            3,
        );
        let oracle = LogDetOracle::new(&cov);
        let brute = brute_force_min(&oracle, false).unwrap();
        assert!(brute.minimizer.is_empty());
        let nonempty = brute_force_min(&oracle, true).unwrap();
        assert_eq!(nonempty.minimizer, vec![0]);
    }

    #[test]
    fn prefix_chain_matches_direct_evaluation() {
        let cov = cov_from(
            &[
                2.0, 0.5, 0.2, 0.1, //
                0.5, 1.5, 0.3, 0.2, //
                0.2, 0.3, 1.8, 0.4, //
                0.1, 0.2, 0.4, 1.2,
            ],
            4,
        );
        let oracle = LogDetOracle::new(&cov);
        let order = [2usize, 0, 3, 1];
        let chain = oracle.eval_prefix_chain(&order);
        let mut prefix: Vec<usize> = Vec::new();
        for (i, &v) in order.iter().enumerate() {
            prefix.push(v);
            let mut sorted = prefix.clone();
            sorted.sort_unstable();
            assert!((chain[i] - oracle.eval(&sorted)).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_vertex_lies_on_base_polytope() {
        let cov = cov_from(
            &[2.0, 0.5, 0.2, 0.5, 1.5, 0.3, 0.2, 0.3, 1.8],
            3,
        );
        let oracle = LogDetOracle::new(&cov);
        let direction = [0.3, -1.0, 0.4];
        let q = greedy_vertex(&oracle, 0.0, &direction);
        // prefix sums along the sorted order must reproduce prefix values
        let order = [1usize, 0, 2];
        let mut sum = 0.0;
        let mut prefix: Vec<usize> = Vec::new();
        for &v in &order {
            sum += q[v];
            prefix.push(v);
            let mut sorted = prefix.clone();
            sorted.sort_unstable();
            assert!((sum - oracle.eval(&sorted)).abs() < 1e-12);
        }
    }

    #[test]
    fn mnp_matches_brute_force_on_log_det() {
        let cov = cov_from(
            &[
                1.3, 0.8, 0.1, 0.0, //
                0.8, 1.1, 0.2, 0.1, //
                0.1, 0.2, 0.9, 0.3, //
                0.0, 0.1, 0.3, 1.4,
            ],
            4,
        );
        let oracle = LogDetOracle::new(&cov);
        let brute = brute_force_min(&oracle, false).unwrap();
        let mnp = min_norm_point(&oracle, 1e-9, None).unwrap();
        assert_eq!(mnp.minimizer, brute.minimizer);
        assert!((mnp.value - brute.value).abs() <= 1e-9);
        assert!(mnp.certificate_gap <= 1e-9);
    }

    #[test]
    fn brute_force_cap_is_enforced() {
        let oracle = ModularOracle {
            weights: vec![1.0; BRUTE_FORCE_CAP + 1],
        };
        assert!(matches!(
            brute_force_min(&oracle, false),
            Err(Error::Capability(_))
        ));
    }
}
