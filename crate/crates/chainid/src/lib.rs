//! Identifiability of chain graph models from Gaussian covariances.
//!
//! The crate recovers the component structure of a linear Gaussian model
//! over a chain graph from its covariance alone: a topological order of
//! known components via super-additive matrix statistics on conditional
//! covariances, the partition itself when unknown via repeated submodular
//! minimization of log-determinant set functions, and finally the edges.
//! A synthetic benchmark harness measures both algorithms end to end.
//!
//! Everything numeric is generic over the scalar type through [`Scalar`];
//! `f64` is the default used by the aliases at the crate root.

pub mod cov;
pub mod error;
pub mod eval;
pub mod graph;
pub mod learn;
pub mod matrix;
pub mod scalar;
pub mod sem;
pub mod sfm;
pub mod stat;

pub use cov::{CovJson, CovMatrix};
pub use error::{Error, Result};
pub use eval::{
    aggregate, aggregate_timing, reports_to_jsonl, run_sweep, run_trial, BenchAlgorithm,
    BenchMode, BenchmarkConfig, BenchmarkConfigJson, GroupSummary, GroupTiming, Summary,
    TimingSummary, TrialReport,
};
pub use graph::{ChainGraph, GraphJson, TopologicalOrder, Violation};
pub use learn::{
    empirical_covariance, learn_order_known, learn_order_known_from_data, learn_unknown,
    recover_edges, EdgeTest, LearnMode, LearnResult, LearnResultJson, ORDER_TIE_REL_TOL,
};
pub use matrix::Mat;
pub use scalar::Scalar;
pub use sem::{
    equicorrelation_noise, generate_certified_known, generate_certified_unknown,
    generate_chain_graph, generate_noise_cov, generate_sem, generate_weights, min_step_gap,
    verify_conditions, AmpSem, CertifiedParams, ComponentConditions, ConditionReport, Dataset,
    SemJson, CONDITION_ENUMERATION_CAP, EDGE_SUPPORT_TOL,
};
pub use sfm::{
    brute_force_min, min_nonempty, min_norm_point, LogDetOracle, ModularOracle, SfmMethod,
    SfmResult, SubmodularOracle, BRUTE_FORCE_CAP,
};
pub use stat::{Statistic, PERMANENT_DIM_CAP};

/// Default-precision matrix.
pub type Mat64 = Mat<f64>;
/// Default-precision covariance.
pub type Cov64 = CovMatrix<f64>;
/// Default-precision structural model.
pub type Sem64 = AmpSem<f64>;
/// Single-precision matrix.
pub type Mat32 = Mat<f32>;
/// Single-precision covariance.
pub type Cov32 = CovMatrix<f32>;
/// Single-precision structural model.
pub type Sem32 = AmpSem<f32>;
