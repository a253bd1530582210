//! Structure recovery from a covariance matrix.
//!
//! Three stages, composable but independent: ordering known chain components
//! by greedily minimizing a super-additive statistic of conditional
//! covariances, recovering an unknown component partition by repeated
//! submodular minimization of the conditional log-determinant, and filling
//! in edges once components and order are fixed. Every stage consumes a
//! [`CovMatrix`], which may be exact (from a model) or empirical (from
//! samples); sample-based edge tests switch from thresholding to Fisher-z
//! partial correlation tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cov::CovMatrix;
use crate::error::{Error, Result};
use crate::graph::{ChainGraph, GraphJson};
use crate::matrix::Mat;
use crate::scalar::Scalar;
use crate::sem::{Dataset, EDGE_SUPPORT_TOL};
use crate::sfm::{min_nonempty, LogDetOracle, SfmMethod};
use crate::stat::Statistic;

/// Relative slack under which two statistic values count as tied, in which
/// case the lower component index wins.
pub const ORDER_TIE_REL_TOL: f64 = 1e-9;

/// Which recovery problem a result answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnMode {
    KnownOrder,
    UnknownPartition,
}

impl std::fmt::Display for LearnMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LearnMode::KnownOrder => write!(f, "known_order"),
            LearnMode::UnknownPartition => write!(f, "unknown_partition"),
        }
    }
}

/// Output of the recovery stages.
///
/// `partition` lists components by their index; `order[i]` is the index of
/// the component placed at step `i`, so for unknown-partition results where
/// discovery and placement coincide it is the identity. `step_values[i]` is
/// the minimized objective at step `i` on the statistic's own scale, and
/// `graph` is present once edges have been recovered.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnResult {
    pub mode: LearnMode,
    pub statistic: Option<Statistic>,
    pub order: Vec<usize>,
    pub partition: Vec<Vec<usize>>,
    pub step_values: Vec<f64>,
    pub graph: Option<ChainGraph>,
}

impl LearnResult {
    pub fn to_json(&self) -> LearnResultJson {
        LearnResultJson {
            mode: self.mode,
            statistic: self.statistic.map(|s| s.to_string()),
            order: self.order.clone(),
            partition: self.partition.clone(),
            step_values: self.step_values.clone(),
            graph: self.graph.as_ref().map(GraphJson::from),
        }
    }

    pub fn from_json(j: &LearnResultJson) -> Result<Self> {
        let statistic = j
            .statistic
            .as_deref()
            .map(str::parse::<Statistic>)
            .transpose()?;
        let graph = j
            .graph
            .clone()
            .map(ChainGraph::try_from)
            .transpose()?;
        let k = j.partition.len();
        if j.order.len() != k {
            return Err(Error::Argument(format!(
                "order lists {} components, partition has {k}",
                j.order.len()
            )));
        }
        let mut seen = vec![false; k];
        for &i in &j.order {
            if i >= k || seen[i] {
                return Err(Error::Argument(format!(
                    "order is not a permutation of 0..{k}"
                )));
            }
            seen[i] = true;
        }
        Ok(LearnResult {
            mode: j.mode,
            statistic,
            order: j.order.clone(),
            partition: j.partition.clone(),
            step_values: j.step_values.clone(),
            graph,
        })
    }
}

/// Serialization mirror of [`LearnResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnResultJson {
    pub mode: LearnMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<String>,
    pub order: Vec<usize>,
    pub partition: Vec<Vec<usize>>,
    pub step_values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphJson>,
}

fn check_partition<T: Scalar>(cov: &CovMatrix<T>, partition: &[Vec<usize>]) -> Result<()> {
    if partition.is_empty() {
        return Err(Error::Argument("partition has no components".into()));
    }
    let mut covered = std::collections::BTreeSet::new();
    for comp in partition {
        if comp.is_empty() {
            return Err(Error::Argument("partition has an empty component".into()));
        }
        for &v in comp {
            if cov.position(v).is_none() {
                return Err(Error::Argument(format!(
                    "partition vertex {v} is not a covariance label"
                )));
            }
            if !covered.insert(v) {
                return Err(Error::Argument(format!(
                    "vertex {v} appears in two components"
                )));
            }
        }
    }
    if covered.len() != cov.labels().len() {
        return Err(Error::Argument(format!(
            "partition covers {} of {} variables",
            covered.len(),
            cov.labels().len()
        )));
    }
    Ok(())
}

/// Orders known chain components by greedy minimization.
///
/// At each step the statistic is evaluated on every remaining component's
/// covariance conditional on all previously placed vertices; the smallest
/// value is placed next, with ties (relative slack [`ORDER_TIE_REL_TOL`])
/// going to the lowest component index.
pub fn learn_order_known<T: Scalar>(
    cov: &CovMatrix<T>,
    partition: &[Vec<usize>],
    statistic: Statistic,
) -> Result<LearnResult> {
    check_partition(cov, partition)?;
    let k = partition.len();
    let mut placed_vertices: Vec<usize> = Vec::new();
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut order = Vec::with_capacity(k);
    let mut step_values = Vec::with_capacity(k);
    let tie = T::from_f64v(ORDER_TIE_REL_TOL);

    while !remaining.is_empty() {
        let cond = if placed_vertices.is_empty() {
            cov.clone()
        } else {
            cov.conditional_cov(&placed_vertices)?
        };
        let mut best: Option<(usize, T)> = None;
        for &ci in &remaining {
            let block = cond.submatrix(&partition[ci])?;
            let value = statistic.evaluate(&block)?;
            let strictly_better = match best {
                None => true,
                Some((_, b)) => value < b - b.abs() * tie,
            };
            if strictly_better {
                best = Some((ci, value));
            }
        }
        let (next, value) = best.expect("remaining set is non-empty");
        order.push(next);
        step_values.push(value.to_f64v());
        placed_vertices.extend_from_slice(&partition[next]);
        placed_vertices.sort_unstable();
        remaining.retain(|&ci| ci != next);
    }

    Ok(LearnResult {
        mode: LearnMode::KnownOrder,
        statistic: Some(statistic),
        order,
        partition: partition.to_vec(),
        step_values,
        graph: None,
    })
}

/// Recovers an unknown component partition by repeated constrained
/// submodular minimization.
///
/// At each step the non-empty set of remaining variables minimizing the
/// determinant of its covariance conditional on everything already placed
/// is split off as the next component. Components come out in discovery
/// order, which is simultaneously the recovered topological order.
pub fn learn_unknown<T: Scalar>(
    cov: &CovMatrix<T>,
    tolerance: T,
    method: SfmMethod,
) -> Result<LearnResult> {
    let n = cov.labels().len();
    let mut placed: Vec<usize> = Vec::new();
    let mut partition = Vec::new();
    let mut step_values = Vec::new();

    while placed.len() < n {
        let cond = if placed.is_empty() {
            cov.clone()
        } else {
            cov.conditional_cov(&placed)?
        };
        let oracle = LogDetOracle::new(&cond);
        let res = min_nonempty(&oracle, tolerance, method)?;
        let mut comp: Vec<usize> = res
            .minimizer
            .iter()
            .map(|&i| cond.labels()[i])
            .collect();
        comp.sort_unstable();
        step_values.push(res.value.to_f64v().exp());
        placed.extend_from_slice(&comp);
        placed.sort_unstable();
        partition.push(comp);
    }

    let k = partition.len();
    Ok(LearnResult {
        mode: LearnMode::UnknownPartition,
        statistic: Some(Statistic::Determinant),
        order: (0..k).collect(),
        partition,
        step_values,
        graph: None,
    })
}

/// Sample covariance with the unbiased `1/(n-1)` normalization, labels
/// `0..d`. Requires more samples than variables so the estimate can be
/// positive definite.
pub fn empirical_covariance<T: Scalar>(data: &Dataset<T>) -> Result<CovMatrix<T>> {
    let d = data.n_vars();
    let n = data.n_samples();
    if n <= d {
        return Err(Error::Data(format!(
            "need more samples than variables for a definite estimate, got {n} <= {d}"
        )));
    }
    let mut mean = vec![T::zero(); d];
    for i in 0..n {
        for (m, &x) in mean.iter_mut().zip(data.row(i)) {
            *m += x;
        }
    }
    let n_t = T::from_f64v(n as f64);
    for m in &mut mean {
        *m /= n_t;
    }
    let mut s = Mat::zeros(d, d);
    for i in 0..n {
        let row = data.row(i);
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in a..d {
                s[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    let denom = T::from_f64v((n - 1) as f64);
    for a in 0..d {
        for b in a..d {
            let v = s[(a, b)] / denom;
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    CovMatrix::new(s, (0..d).collect()).map_err(|e| match e {
        Error::NotPositiveDefinite { ratio, tol } => Error::Data(format!(
            "sample covariance is numerically singular (eigenvalue ratio {ratio:.3e}, \
             tolerance {tol:.3e}); draw more samples"
        )),
        other => other,
    })
}

/// [`learn_order_known`] on the sample covariance of `data`.
pub fn learn_order_known_from_data<T: Scalar>(
    data: &Dataset<T>,
    partition: &[Vec<usize>],
    statistic: Statistic,
) -> Result<LearnResult> {
    let cov = empirical_covariance(data)?;
    learn_order_known(&cov, partition, statistic)
}

/// How presence of an edge is decided during recovery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeTest {
    /// Threshold on exact coefficients; suits population covariances.
    Population { threshold: f64 },
    /// Two-sided Fisher-z partial correlation test at level `alpha` for a
    /// sample covariance estimated from `n_samples` rows.
    FisherZ { alpha: f64, n_samples: usize },
}

impl Default for EdgeTest {
    fn default() -> Self {
        EdgeTest::Population {
            threshold: EDGE_SUPPORT_TOL,
        }
    }
}

impl EdgeTest {
    /// Significance decision for a partial correlation `r` observed with
    /// `n_cond` conditioning variables.
    fn keeps_edge(&self, coefficient: f64, r: f64, n_cond: usize) -> bool {
        match *self {
            EdgeTest::Population { threshold } => coefficient.abs() > threshold,
            EdgeTest::FisherZ { alpha, n_samples } => {
                let dof = n_samples as f64 - n_cond as f64 - 3.0;
                if dof <= 0.0 {
                    return false;
                }
                let r = r.clamp(-0.999_999, 0.999_999);
                let z = dof.sqrt() * r.atanh().abs();
                let normal = Normal::new(0.0, 1.0).expect("unit normal");
                z > normal.inverse_cdf(1.0 - alpha / 2.0)
            }
        }
    }
}

/// Fills in edges for a fixed partition and component order.
///
/// Directed edges into a component are read off the regression of the
/// component on all earlier vertices; undirected edges inside it come from
/// the precision of its covariance conditional on those vertices. Recovered
/// components are the connected pieces of the recovered undirected edges
/// inside each given component, so the returned graph is always a valid
/// chain graph even when a sample-based test drops a bridging edge.
pub fn recover_edges<T: Scalar>(
    cov: &CovMatrix<T>,
    partition: &[Vec<usize>],
    order: &[usize],
    test: &EdgeTest,
) -> Result<ChainGraph> {
    check_partition(cov, partition)?;
    let n = cov.labels().len();
    for (expect, &label) in cov.labels().iter().enumerate() {
        if expect != label {
            return Err(Error::Argument(
                "edge recovery needs contiguous variable labels 0..n".into(),
            ));
        }
    }
    if order.len() != partition.len() {
        return Err(Error::Argument(format!(
            "order lists {} components, partition has {}",
            order.len(),
            partition.len()
        )));
    }
    let mut seen = vec![false; partition.len()];
    for &i in order {
        if i >= partition.len() || seen[i] {
            return Err(Error::Argument(
                "order is not a permutation of the component indices".into(),
            ));
        }
        seen[i] = true;
    }

    let mut directed: Vec<(usize, usize)> = Vec::new();
    let mut undirected: Vec<(usize, usize)> = Vec::new();
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut placed: Vec<usize> = Vec::new();

    for &ci in order {
        let comp = &partition[ci];
        // directed edges: regression of the component on everything earlier
        if !placed.is_empty() {
            let p = placed.len();
            let ppos: Vec<usize> = placed
                .iter()
                .map(|&u| cov.position(u).expect("validated label"))
                .collect();
            let spp = Mat::from_fn(p, p, |a, b| cov.mat()[(ppos[a], ppos[b])]);
            for &v in comp {
                let vpos = cov.position(v).expect("validated label");
                let rhs = Mat::from_fn(p, 1, |a, _| cov.mat()[(ppos[a], vpos)]);
                let beta = spp.solve_spd(&rhs)?;
                for (a, &u) in placed.iter().enumerate() {
                    let keep = match test {
                        EdgeTest::Population { .. } => {
                            test.keeps_edge(beta[(a, 0)].to_f64v(), 0.0, 0)
                        }
                        EdgeTest::FisherZ { .. } => {
                            let others: Vec<usize> = placed
                                .iter()
                                .copied()
                                .filter(|&w| w != u)
                                .collect();
                            let pair = if others.is_empty() {
                                cov.submatrix(&[u.min(v), u.max(v)])?
                            } else {
                                cov.conditional_cov(&others)?
                                    .submatrix(&[u.min(v), u.max(v)])?
                            };
                            let c = pair.mat();
                            let r = (c[(0, 1)]
                                / (c[(0, 0)] * c[(1, 1)]).sqrt())
                            .to_f64v();
                            test.keeps_edge(0.0, r, others.len())
                        }
                    };
                    if keep {
                        directed.push((u, v));
                    }
                }
            }
        }

        // undirected edges: precision of the conditional component block
        let block = if placed.is_empty() {
            cov.submatrix(comp)?
        } else {
            cov.conditional_cov(&placed)?.submatrix(comp)?
        };
        let mut local_edges: Vec<(usize, usize)> = Vec::new();
        if comp.len() > 1 {
            let theta = block.precision()?;
            for a in 0..comp.len() {
                for b in (a + 1)..comp.len() {
                    let coefficient = theta[(a, b)].to_f64v();
                    let r = -coefficient
                        / (theta[(a, a)] * theta[(b, b)]).to_f64v().sqrt();
                    let n_cond = placed.len() + comp.len() - 2;
                    if test.keeps_edge(coefficient, r, n_cond) {
                        local_edges.push((a, b));
                        undirected.push((comp[a], comp[b]));
                    }
                }
            }
        }
        // split on recovered connectivity so the result always validates
        components.extend(connected_pieces(comp, &local_edges));
        placed.extend_from_slice(comp);
        placed.sort_unstable();
    }

    Ok(ChainGraph::new(n, components, &directed, &undirected)?)
}

fn connected_pieces(comp: &[usize], local_edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let k = comp.len();
    let mut piece = vec![usize::MAX; k];
    let mut n_pieces = 0;
    for start in 0..k {
        if piece[start] != usize::MAX {
            continue;
        }
        let id = n_pieces;
        n_pieces += 1;
        let mut stack = vec![start];
        piece[start] = id;
        while let Some(a) = stack.pop() {
            for &(x, y) in local_edges {
                let next = if x == a { y } else if y == a { x } else { continue };
                if piece[next] == usize::MAX {
                    piece[next] = id;
                    stack.push(next);
                }
            }
        }
    }
    let mut out = vec![Vec::new(); n_pieces];
    for (i, &id) in piece.iter().enumerate() {
        out[id].push(comp[i]);
    }
    out
}
