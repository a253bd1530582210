//! Benchmark harness: certified instances in, recovery metrics out.
//!
//! A sweep is a grid over variable counts times a trial count. Each trial is
//! pure: its seed is `base_seed ^ flat_index`, so any subset of trials can be
//! re-run bit-identically, in any order, on any number of threads. Trial
//! failures (generation giving up, non-convergence) are recorded in the
//! report and scored as incorrect; they never abort a sweep.
//!
//! Wall-clock time is measured per trial but kept out of [`Summary`], which
//! therefore serializes byte-identically across reruns and thread counts;
//! timing lives in the separate [`TimingSummary`].

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cov::CovMatrix;
use crate::error::{Error, Result};
use crate::graph::GraphJson;
use crate::learn::{
    learn_order_known, learn_unknown, empirical_covariance, recover_edges, EdgeTest, LearnResult,
    LearnResultJson,
};
use crate::sem::{generate_certified_known, generate_certified_unknown, CertifiedParams};
use crate::sfm::SfmMethod;
use crate::stat::Statistic;

/// Stream separator between instance generation and sampling noise.
const SAMPLE_STREAM: u64 = 0xA5A5_5A5A_C0FF_EE00;

/// Covariance source for a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMode {
    /// Exact model covariance.
    Population,
    /// Sample covariance of `n_samples` draws.
    Empirical,
}

impl std::fmt::Display for BenchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BenchMode::Population => write!(f, "population"),
            BenchMode::Empirical => write!(f, "empirical"),
        }
    }
}

impl std::str::FromStr for BenchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "population" => Ok(BenchMode::Population),
            "empirical" => Ok(BenchMode::Empirical),
            other => Err(Error::Argument(format!(
                "unknown mode '{other}' (expected population|empirical)"
            ))),
        }
    }
}

/// Which recovery problem a trial exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchAlgorithm {
    /// Components given; recover the order, then edges.
    Known,
    /// Recover partition and order together, then edges.
    Unknown,
}

impl std::fmt::Display for BenchAlgorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BenchAlgorithm::Known => write!(f, "known"),
            BenchAlgorithm::Unknown => write!(f, "unknown"),
        }
    }
}

impl std::str::FromStr for BenchAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "known" => Ok(BenchAlgorithm::Known),
            "unknown" => Ok(BenchAlgorithm::Unknown),
            other => Err(Error::Argument(format!(
                "unknown algorithm '{other}' (expected known|unknown)"
            ))),
        }
    }
}

/// Sweep definition.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    /// Variable counts, ascending.
    pub d_list: Vec<usize>,
    /// Rows drawn per trial in empirical mode.
    pub n_samples: usize,
    /// Trials per variable count.
    pub n_trials: usize,
    pub base_seed: u64,
    pub mode: BenchMode,
    pub algorithm: BenchAlgorithm,
    /// Ordering statistic for the known-components algorithm.
    pub statistic: Statistic,
    /// Certification margin passed to the instance generators.
    pub margin: f64,
    /// Component count; defaults to `max(2, d / 5)` per d.
    pub n_components: Option<usize>,
    pub expected_neighbors: f64,
    /// Minimizer used by the unknown-partition algorithm.
    pub sfm_method: SfmMethod,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            d_list: vec![10, 20, 30, 40, 50],
            n_samples: 1000,
            n_trials: 20,
            base_seed: 0,
            mode: BenchMode::Population,
            algorithm: BenchAlgorithm::Known,
            statistic: Statistic::Determinant,
            margin: 0.4,
            n_components: None,
            expected_neighbors: 2.0,
            sfm_method: SfmMethod::MinNormPoint,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_list.is_empty() {
            return Err(Error::Argument("d_list is empty".into()));
        }
        if self.d_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument(
                "d_list must be strictly ascending".into(),
            ));
        }
        if self.d_list[0] == 0 {
            return Err(Error::Argument("variable counts must be positive".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::Argument("n_trials must be positive".into()));
        }
        if self.mode == BenchMode::Empirical && self.n_samples <= *self.d_list.last().unwrap() {
            return Err(Error::Argument(format!(
                "empirical mode needs n_samples > largest d, got {} <= {}",
                self.n_samples,
                self.d_list.last().unwrap()
            )));
        }
        if self.margin.is_nan() || self.margin <= 0.0 {
            return Err(Error::Argument("margin must be positive".into()));
        }
        if self.expected_neighbors.is_nan() || self.expected_neighbors < 0.0 {
            return Err(Error::Argument(
                "expected_neighbors must be non-negative".into(),
            ));
        }
        if let Some(c) = self.n_components {
            if c == 0 || self.d_list.iter().any(|&d| c > d) {
                return Err(Error::Argument(format!(
                    "n_components {c} must be in 1..=d for every d"
                )));
            }
        }
        Ok(())
    }

    /// Trials in the sweep: `d_list.len() * n_trials`.
    pub fn total_trials(&self) -> u64 {
        (self.d_list.len() * self.n_trials) as u64
    }

    fn components_for(&self, d: usize) -> usize {
        self.n_components.unwrap_or_else(|| (d / 5).max(2)).min(d)
    }

    pub fn to_json(&self) -> BenchmarkConfigJson {
        BenchmarkConfigJson {
            d_list: Some(self.d_list.clone()),
            n_samples: Some(self.n_samples),
            n_trials: Some(self.n_trials),
            base_seed: Some(self.base_seed),
            mode: Some(self.mode.to_string()),
            algorithm: Some(self.algorithm.to_string()),
            statistic: Some(self.statistic.to_string()),
            margin: Some(self.margin),
            n_components: self.n_components,
            expected_neighbors: Some(self.expected_neighbors),
            sfm_method: Some(self.sfm_method.to_string()),
        }
    }

    /// Builds a config from a partial JSON description; absent fields keep
    /// their defaults.
    pub fn from_json(j: &BenchmarkConfigJson) -> Result<Self> {
        let defaults = BenchmarkConfig::default();
        let config = BenchmarkConfig {
            d_list: j.d_list.clone().unwrap_or(defaults.d_list),
            n_samples: j.n_samples.unwrap_or(defaults.n_samples),
            n_trials: j.n_trials.unwrap_or(defaults.n_trials),
            base_seed: j.base_seed.unwrap_or(defaults.base_seed),
            mode: j
                .mode
                .as_deref()
                .map(str::parse)
                .transpose()?
                .unwrap_or(defaults.mode),
            algorithm: j
                .algorithm
                .as_deref()
                .map(str::parse)
                .transpose()?
                .unwrap_or(defaults.algorithm),
            statistic: j
                .statistic
                .as_deref()
                .map(str::parse)
                .transpose()?
                .unwrap_or(defaults.statistic),
            margin: j.margin.unwrap_or(defaults.margin),
            n_components: j.n_components,
            expected_neighbors: j.expected_neighbors.unwrap_or(defaults.expected_neighbors),
            sfm_method: j
                .sfm_method
                .as_deref()
                .map(str::parse)
                .transpose()?
                .unwrap_or(defaults.sfm_method),
        };
        config.validate()?;
        Ok(config)
    }
}

/// Serialization mirror of [`BenchmarkConfig`]; every field optional so a
/// config file can state only what it overrides.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BenchmarkConfigJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_components: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_neighbors: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sfm_method: Option<String>,
}

/// Outcome of one trial. Failed trials carry `error` and score as incorrect.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialReport {
    pub d: usize,
    pub trial_index: u64,
    pub seed: u64,
    pub mode: BenchMode,
    pub algorithm: BenchAlgorithm,
    pub true_graph: GraphJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learned: Option<LearnResultJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shd: Option<usize>,
    pub order_correct: bool,
    pub partition_correct: bool,
    /// Learning plus edge recovery, in seconds; instance generation and
    /// certification are excluded.
    pub wall_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Runs the trial at `index` in the flat grid `d_list x 0..n_trials`.
///
/// Deterministic given `(config, index)` apart from `wall_time`.
pub fn run_trial(config: &BenchmarkConfig, index: u64) -> TrialReport {
    let d_idx = (index / config.n_trials as u64) as usize;
    let d = config.d_list[d_idx];
    let seed = config.base_seed ^ index;
    let params = CertifiedParams {
        n_vars: d,
        n_components: config.components_for(d),
        expected_neighbors: config.expected_neighbors,
        margin: config.margin,
        seed,
        max_tries: 200,
    };

    let sem = match config.algorithm {
        BenchAlgorithm::Known => generate_certified_known::<f64>(&params),
        BenchAlgorithm::Unknown => generate_certified_unknown::<f64>(&params),
    };
    let sem = match sem {
        Ok(s) => s,
        Err(e) => {
            return TrialReport {
                d,
                trial_index: index,
                seed,
                mode: config.mode,
                algorithm: config.algorithm,
                true_graph: GraphJson {
                    n: d,
                    components: Vec::new(),
                    directed_edges: Vec::new(),
                    undirected_edges: Vec::new(),
                },
                learned: None,
                shd: None,
                order_correct: false,
                partition_correct: false,
                wall_time: 0.0,
                error: Some(e.to_string()),
            };
        }
    };
    let truth = sem.graph().clone();
    let start = Instant::now();
    let outcome = trial_body(config, &sem, seed);
    let wall_time = start.elapsed().as_secs_f64();

    match outcome {
        Ok((learned, shd, order_correct, partition_correct)) => TrialReport {
            d,
            trial_index: index,
            seed,
            mode: config.mode,
            algorithm: config.algorithm,
            true_graph: GraphJson::from(&truth),
            learned: Some(learned.to_json()),
            shd: Some(shd),
            order_correct,
            partition_correct,
            wall_time,
            error: None,
        },
        Err(e) => TrialReport {
            d,
            trial_index: index,
            seed,
            mode: config.mode,
            algorithm: config.algorithm,
            true_graph: GraphJson::from(&truth),
            learned: None,
            shd: None,
            order_correct: false,
            partition_correct: false,
            wall_time,
            error: Some(e.to_string()),
        },
    }
}

fn trial_body(
    config: &BenchmarkConfig,
    sem: &crate::sem::AmpSem<f64>,
    seed: u64,
) -> Result<(LearnResult, usize, bool, bool)> {
    let truth = sem.graph();
    let cov: CovMatrix<f64> = match config.mode {
        BenchMode::Population => sem.population_covariance()?,
        BenchMode::Empirical => {
            let data = sem.sample(config.n_samples, seed ^ SAMPLE_STREAM)?;
            empirical_covariance(&data)?
        }
    };
    let edge_test = match config.mode {
        BenchMode::Population => EdgeTest::default(),
        BenchMode::Empirical => EdgeTest::FisherZ {
            alpha: 0.001,
            n_samples: config.n_samples,
        },
    };

    let mut learned = match config.algorithm {
        BenchAlgorithm::Known => {
            learn_order_known(&cov, truth.components(), config.statistic)?
        }
        BenchAlgorithm::Unknown => {
            learn_unknown(&cov, 1e-9, config.sfm_method)?
        }
    };
    let graph = recover_edges(&cov, &learned.partition, &learned.order, &edge_test)?;
    let shd = graph.shd(truth)?;
    learned.graph = Some(graph);

    let partition_correct = {
        let truth_set: std::collections::BTreeSet<&Vec<usize>> =
            truth.components().iter().collect();
        let found_set: std::collections::BTreeSet<&Vec<usize>> =
            learned.partition.iter().collect();
        truth_set == found_set
    };
    let order_correct = match config.algorithm {
        BenchAlgorithm::Known => truth.is_topological(&learned.order),
        BenchAlgorithm::Unknown => {
            partition_correct && {
                let as_truth: Vec<usize> = learned
                    .partition
                    .iter()
                    .filter_map(|comp| {
                        truth.components().iter().position(|c| c == comp)
                    })
                    .collect();
                as_truth.len() == truth.n_components() && truth.is_topological(&as_truth)
            }
        }
    };
    Ok((learned, shd, order_correct, partition_correct))
}

/// Runs every trial of the sweep, optionally on a thread pool.
///
/// Reports come back sorted by trial index regardless of `jobs`, and all
/// fields except `wall_time` are independent of `jobs`.
pub fn run_sweep(config: &BenchmarkConfig, jobs: usize) -> Result<Vec<TrialReport>> {
    config.validate()?;
    let total = config.total_trials();
    if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
        use rayon::prelude::*;
        Ok(pool.install(|| {
            (0..total)
                .into_par_iter()
                .map(|i| run_trial(config, i))
                .collect()
        }))
    } else {
        Ok((0..total).map(|i| run_trial(config, i)).collect())
    }
}

/// Aggregated metrics of one `(d, mode, algorithm)` group.
///
/// Rates are over all trials with failures counted incorrect; SHD moments
/// are over scored trials only and absent when every trial failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub d: usize,
    pub mode: BenchMode,
    pub algorithm: BenchAlgorithm,
    pub n_trials: usize,
    pub n_failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_shd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd_shd: Option<f64>,
    pub order_rate: f64,
    pub partition_rate: f64,
}

/// Deterministic sweep summary: no timing, no timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub groups: Vec<GroupSummary>,
}

impl Summary {
    /// Pretty JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    /// CSV with one row per group. Float columns use 17 significant digits;
    /// SHD columns are empty when every trial in the group failed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "d,mode,algorithm,mean_shd,sd_shd,order_rate,partition_rate,n_trials,n_failures\n",
        );
        for g in &self.groups {
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
            out.push_str(&format!(
                "{},{},{},{},{},{:.16e},{:.16e},{},{}\n",
                g.d,
                g.mode,
                g.algorithm,
                opt(g.mean_shd),
                opt(g.sd_shd),
                g.order_rate,
                g.partition_rate,
                g.n_trials,
                g.n_failures
            ));
        }
        out
    }

    /// Aligned text table for terminals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:>4} {:>10} {:>8} {:>10} {:>10} {:>10} {:>14} {:>8} {:>10}\n",
            "d", "mode", "algo", "mean_shd", "sd_shd", "order_rate", "partition_rate", "trials",
            "failures"
        ));
        for g in &self.groups {
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
            out.push_str(&format!(
                "{:>4} {:>10} {:>8} {:>10} {:>10} {:>10.3} {:>14.3} {:>8} {:>10}\n",
                g.d,
                g.mode,
                g.algorithm,
                opt(g.mean_shd),
                opt(g.sd_shd),
                g.order_rate,
                g.partition_rate,
                g.n_trials,
                g.n_failures
            ));
        }
        out
    }
}

/// Per-group mean wall time, kept separate from [`Summary`] so the latter
/// stays byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTiming {
    pub d: usize,
    pub mode: BenchMode,
    pub algorithm: BenchAlgorithm,
    pub mean_seconds: f64,
}

/// Timing sidecar for a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub groups: Vec<GroupTiming>,
}

/// Folds reports into per-`(d, mode, algorithm)` summaries, sorted by key;
/// invariant under report permutation.
pub fn aggregate(reports: &[TrialReport]) -> Result<Summary> {
    if reports.is_empty() {
        return Err(Error::Argument("no reports to aggregate".into()));
    }
    let mut keys: Vec<(usize, BenchMode, BenchAlgorithm)> = reports
        .iter()
        .map(|r| (r.d, r.mode, r.algorithm))
        .collect();
    keys.sort_unstable();
    keys.dedup();

    let mut groups = Vec::with_capacity(keys.len());
    for key in keys {
        let members: Vec<&TrialReport> = reports
            .iter()
            .filter(|r| (r.d, r.mode, r.algorithm) == key)
            .collect();
        let n_trials = members.len();
        let n_failures = members.iter().filter(|r| r.error.is_some()).count();
        let shds: Vec<f64> = members
            .iter()
            .filter_map(|r| r.shd)
            .map(|s| s as f64)
            .collect();
        let (mean_shd, sd_shd) = if shds.is_empty() {
            (None, None)
        } else {
            let mean = shds.iter().sum::<f64>() / shds.len() as f64;
            let sd = if shds.len() < 2 {
                0.0
            } else {
                (shds.iter().map(|s| (s - mean).powi(2)).sum::<f64>()
                    / (shds.len() - 1) as f64)
                    .sqrt()
            };
            (Some(mean), Some(sd))
        };
        let order_rate =
            members.iter().filter(|r| r.order_correct).count() as f64 / n_trials as f64;
        let partition_rate =
            members.iter().filter(|r| r.partition_correct).count() as f64 / n_trials as f64;
        groups.push(GroupSummary {
            d: key.0,
            mode: key.1,
            algorithm: key.2,
            n_trials,
            n_failures,
            mean_shd,
            sd_shd,
            order_rate,
            partition_rate,
        });
    }
    Ok(Summary { groups })
}

/// Mean wall time per group, aligned with [`aggregate`]'s group order.
pub fn aggregate_timing(reports: &[TrialReport]) -> Result<TimingSummary> {
    let summary = aggregate(reports)?;
    let groups = summary
        .groups
        .iter()
        .map(|g| {
            let key = (g.d, g.mode, g.algorithm);
            let times: Vec<f64> = reports
                .iter()
                .filter(|r| (r.d, r.mode, r.algorithm) == key)
                .map(|r| r.wall_time)
                .collect();
            GroupTiming {
                d: g.d,
                mode: g.mode,
                algorithm: g.algorithm,
                mean_seconds: times.iter().sum::<f64>() / times.len() as f64,
            }
        })
        .collect();
    Ok(TimingSummary { groups })
}

/// Serializes reports as JSON lines, sorted by trial index.
pub fn reports_to_jsonl(reports: &[TrialReport]) -> String {
    let mut sorted: Vec<&TrialReport> = reports.iter().collect();
    sorted.sort_by_key(|r| r.trial_index);
    let mut out = String::new();
    for r in sorted {
        out.push_str(&serde_json::to_string(r).expect("report serializes"));
        out.push('\n');
    }
    out
}
