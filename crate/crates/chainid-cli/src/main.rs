//! `chainid`: generate chain graph models, learn their structure back from
//! covariances, benchmark the recovery, and verify identifiability
//! conditions.
//!
//! Exit codes: 0 success, 1 runtime or numeric failure (including failed
//! verification), 2 usage error. Runtime failures print a one-line JSON
//! object `{"error":{"kind":...,"message":...}}` on standard error. The
//! environment variable `CHAINID_SEED` overrides any `--seed` flag.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};

use chainid::cov::CovJson;
use chainid::eval::{
    aggregate, aggregate_timing, reports_to_jsonl, run_sweep, BenchmarkConfig,
    BenchmarkConfigJson,
};
use chainid::graph::GraphJson;
use chainid::learn::{
    empirical_covariance, learn_order_known, learn_unknown, recover_edges, EdgeTest, LearnResult,
    LearnResultJson,
};
use chainid::sem::{
    generate_certified_known, generate_certified_unknown, generate_sem, verify_conditions,
    AmpSem, CertifiedParams, Dataset, SemJson,
};
use chainid::sfm::SfmMethod;
use chainid::stat::Statistic;
use chainid::{ChainGraph, CovMatrix, Error, Result};

/// Stream separator between instance generation and sampling noise; matches
/// the benchmark harness so `generate --samples` and bench trials draw the
/// same data for the same seed.
const SAMPLE_STREAM: u64 = 0xA5A5_5A5A_C0FF_EE00;

#[derive(Parser)]
#[command(
    name = "chainid",
    version,
    about = "Chain graph structure recovery from Gaussian covariances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a model: SEM, graph, population covariance, optional samples
    Generate(GenerateArgs),
    /// Recover order/partition (and edges) from a covariance or data file
    Learn(LearnArgs),
    /// Score a learn result against a ground-truth graph
    Eval(EvalArgs),
    /// Run a benchmark sweep and write reports plus summaries
    Bench(BenchArgs),
    /// Check identifiability conditions of a model with numeric slack
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of variables
    #[arg(long = "n-vars")]
    n_vars: usize,
    /// Number of chain components
    #[arg(long)]
    components: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write data.csv with this many sampled rows
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "expected-neighbors", default_value_t = 2.0)]
    expected_neighbors: f64,
    /// Certification margin for --certified instances
    #[arg(long, default_value_t = 0.4)]
    margin: f64,
    /// Emit a certified instance: "partition" (full identifiability
    /// conditions) or "order" (constant-determinant ordering instances)
    #[arg(long, value_name = "KIND", num_args = 0..=1, default_missing_value = "partition")]
    certified: Option<String>,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("input").required(true).args(["cov", "data"])))]
struct LearnArgs {
    /// Covariance JSON file
    #[arg(long)]
    cov: Option<PathBuf>,
    /// Sample CSV file (header x0,...,x{d-1})
    #[arg(long)]
    data: Option<PathBuf>,
    /// Components file (JSON list of vertex lists, or a graph JSON);
    /// presence selects the known-components ordering algorithm
    #[arg(long)]
    known: Option<PathBuf>,
    /// Ordering statistic for --known: determinant, det_root, trace,
    /// diagonal:<i>, permanent, hadamard
    #[arg(long, default_value = "determinant")]
    stat: String,
    /// Submodular minimizer without --known: brute or mnp
    #[arg(long, default_value = "mnp")]
    sfm: String,
    /// Duality-gap tolerance for the min-norm-point minimizer
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Significance level of the Fisher-z edge test (--data inputs)
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    /// Coefficient threshold of the population edge test (--cov inputs)
    #[arg(long, default_value_t = 1e-8)]
    threshold: f64,
    /// Skip edge recovery; output order/partition only
    #[arg(long = "no-edges")]
    no_edges: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Learn result JSON file
    #[arg(long)]
    result: PathBuf,
    /// Ground-truth graph JSON file
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON config file; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated variable counts, ascending
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// population | empirical
    #[arg(long)]
    mode: Option<String>,
    /// known | unknown
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    stat: Option<String>,
    /// brute | mnp
    #[arg(long)]
    sfm: Option<String>,
    #[arg(long)]
    margin: Option<f64>,
    /// Components per instance (default max(2, d/5))
    #[arg(long)]
    components: Option<usize>,
    #[arg(long = "expected-neighbors")]
    expected_neighbors: Option<f64>,
    /// Trial pool size; results are independent of this value
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// SEM JSON file
    #[arg(long)]
    sem: PathBuf,
    /// Required slack on every condition, in log space
    #[arg(long, default_value_t = 0.0)]
    margin: f64,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let payload = serde_json::json!({
                "error": { "kind": error_kind(&e), "message": e.to_string() }
            });
            eprintln!("{payload}");
            match e {
                Error::Argument(_) => 2,
                _ => 1,
            }
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Learn(args) => cmd_learn(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Argument(_) => "argument",
        Error::NotSymmetric { .. } => "not_symmetric",
        Error::NotPositiveDefinite { .. } => "not_positive_definite",
        Error::SingularBlock { .. } => "singular_block",
        Error::Capability(_) => "capability",
        Error::Convergence { .. } => "convergence",
        Error::Generation { .. } => "generation",
        Error::Data(_) => "data",
        Error::Graph(_) => "graph",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

/// `CHAINID_SEED`, when set, wins over any flag-provided seed.
fn effective_seed(flag: u64) -> Result<u64> {
    match std::env::var("CHAINID_SEED") {
        Ok(text) => text.trim().parse::<u64>().map_err(|_| {
            Error::Argument(format!("CHAINID_SEED must be an unsigned integer, got '{text}'"))
        }),
        Err(_) => Ok(flag),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn pretty<Tj: serde::Serialize>(value: &Tj) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

fn cmd_generate(args: GenerateArgs) -> Result<i32> {
    let seed = effective_seed(args.seed)?;
    let sem: AmpSem<f64> = match args.certified.as_deref() {
        None => generate_sem(args.n_vars, args.components, args.expected_neighbors, seed)?,
        Some(kind) => {
            let params = CertifiedParams {
                n_vars: args.n_vars,
                n_components: args.components,
                expected_neighbors: args.expected_neighbors,
                margin: args.margin,
                seed,
                max_tries: 200,
            };
            match kind {
                "partition" => generate_certified_unknown(&params)?,
                "order" => generate_certified_known(&params)?,
                other => {
                    return Err(Error::Argument(format!(
                        "unknown certification kind '{other}' (expected partition|order)"
                    )))
                }
            }
        }
    };

    let sigma = sem.population_covariance()?;
    write_file(&args.out_dir, "sem.json", &pretty(&sem.to_json()))?;
    write_file(
        &args.out_dir,
        "graph.json",
        &pretty(&GraphJson::from(sem.graph())),
    )?;
    write_file(&args.out_dir, "cov.json", &pretty(&sigma.to_json()))?;
    if let Some(n) = args.samples {
        let data = sem.sample(n, seed ^ SAMPLE_STREAM)?;
        write_file(&args.out_dir, "data.csv", &data.to_csv())?;
    }
    Ok(0)
}

fn load_components(path: &Path) -> Result<Vec<Vec<usize>>> {
    let text = fs::read_to_string(path)?;
    if let Ok(list) = serde_json::from_str::<Vec<Vec<usize>>>(&text) {
        return Ok(list);
    }
    let graph: GraphJson = serde_json::from_str(&text)?;
    Ok(graph.components)
}

fn cmd_learn(args: LearnArgs) -> Result<i32> {
    let (cov, edge_test): (CovMatrix<f64>, EdgeTest) = match (&args.cov, &args.data) {
        (Some(path), None) => {
            let json: CovJson = serde_json::from_str(&fs::read_to_string(path)?)?;
            (
                CovMatrix::from_json(&json)?,
                EdgeTest::Population {
                    threshold: args.threshold,
                },
            )
        }
        (None, Some(path)) => {
            let data = Dataset::<f64>::from_csv(&fs::read_to_string(path)?)?;
            let test = EdgeTest::FisherZ {
                alpha: args.alpha,
                n_samples: data.n_samples(),
            };
            (empirical_covariance(&data)?, test)
        }
        _ => unreachable!("clap enforces exactly one input"),
    };

    let mut result: LearnResult = match &args.known {
        Some(path) => {
            let partition = load_components(path)?;
            let statistic: Statistic = args.stat.parse()?;
            learn_order_known(&cov, &partition, statistic)?
        }
        None => {
            let method: SfmMethod = args.sfm.parse()?;
            learn_unknown(&cov, args.tolerance, method)?
        }
    };
    if !args.no_edges {
        let graph = recover_edges(&cov, &result.partition, &result.order, &edge_test)?;
        result.graph = Some(graph);
    }
    print!("{}", pretty(&result.to_json()));
    Ok(0)
}

fn cmd_eval(args: EvalArgs) -> Result<i32> {
    let result_json: LearnResultJson =
        serde_json::from_str(&fs::read_to_string(&args.result)?)?;
    let result = LearnResult::from_json(&result_json)?;
    let truth_json: GraphJson = serde_json::from_str(&fs::read_to_string(&args.truth)?)?;
    let truth = ChainGraph::try_from(truth_json)?;

    let truth_set: std::collections::BTreeSet<&Vec<usize>> =
        truth.components().iter().collect();
    let found_set: std::collections::BTreeSet<&Vec<usize>> = result.partition.iter().collect();
    let partition_correct = truth_set == found_set;

    let mapped: Option<Vec<usize>> = result
        .order
        .iter()
        .map(|&ci| {
            truth
                .components()
                .iter()
                .position(|c| c == &result.partition[ci])
        })
        .collect();
    let order_correct = partition_correct
        && mapped.as_ref().is_some_and(|m| truth.is_topological(m));

    let shd = result
        .graph
        .as_ref()
        .map(|g| g.shd(&truth))
        .transpose()?;

    let report = serde_json::json!({
        "n_vars": truth.n_vars(),
        "mode": result.mode,
        "partition_correct": partition_correct,
        "order_correct": order_correct,
        "shd": shd,
    });
    print!("{}", pretty(&report));
    Ok(0)
}

fn cmd_bench(args: BenchArgs) -> Result<i32> {
    let mut json: BenchmarkConfigJson = match &args.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => BenchmarkConfigJson::default(),
    };
    if args.d.is_some() {
        json.d_list = args.d.clone();
    }
    if args.trials.is_some() {
        json.n_trials = args.trials;
    }
    if args.samples.is_some() {
        json.n_samples = args.samples;
    }
    if args.seed.is_some() {
        json.base_seed = args.seed;
    }
    if args.mode.is_some() {
        json.mode = args.mode.clone();
    }
    if args.algorithm.is_some() {
        json.algorithm = args.algorithm.clone();
    }
    if args.stat.is_some() {
        json.statistic = args.stat.clone();
    }
    if args.sfm.is_some() {
        json.sfm_method = args.sfm.clone();
    }
    if args.margin.is_some() {
        json.margin = args.margin;
    }
    if args.components.is_some() {
        json.n_components = args.components;
    }
    if args.expected_neighbors.is_some() {
        json.expected_neighbors = args.expected_neighbors;
    }
    json.base_seed = Some(effective_seed(json.base_seed.unwrap_or(0))?);
    let config = BenchmarkConfig::from_json(&json)?;
    if args.jobs == 0 {
        return Err(Error::Argument("--jobs must be at least 1".into()));
    }

    let started = std::time::SystemTime::now();
    let reports = run_sweep(&config, args.jobs)?;
    let summary = aggregate(&reports)?;
    let timing = aggregate_timing(&reports)?;

    write_file(&args.out_dir, "reports.jsonl", &reports_to_jsonl(&reports))?;
    write_file(&args.out_dir, "summary.json", &summary.to_json_string())?;
    write_file(&args.out_dir, "summary.csv", &summary.to_csv())?;
    let meta = serde_json::json!({
        "created_unix_ms": started
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
        "jobs": args.jobs,
        "config": config.to_json(),
        "timing": timing,
    });
    write_file(&args.out_dir, "summary_meta.json", &pretty(&meta))?;
    print!("{}", summary.to_table());

    let n_failures: usize = summary.groups.iter().map(|g| g.n_failures).sum();
    let n_trials: usize = summary.groups.iter().map(|g| g.n_trials).sum();
    if n_failures == n_trials {
        return Err(Error::Data("every trial failed".into()));
    }
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let json: SemJson = serde_json::from_str(&fs::read_to_string(&args.sem)?)?;
    let sem = AmpSem::<f64>::from_json(&json)?;
    let report = verify_conditions(&sem)?;
    let satisfied = report.satisfied_with_margin(args.margin);

    let components: Vec<serde_json::Value> = report
        .components
        .iter()
        .map(|c| {
            serde_json::json!({
                "component": c.component,
                "full_log_det": c.full_log_det,
                "full_slack": c.full_log_det - args.margin,
                "subset_max_log_det": c.subset_max_log_det,
                "subset_slack": c.subset_max_log_det.map(|s| -args.margin - s),
            })
        })
        .collect();
    let payload = serde_json::json!({
        "satisfied": satisfied,
        "margin": args.margin,
        "components": components,
        "monotone_witness": report.monotone_witness,
        "monotone_slack": report.monotone_slack,
    });
    print!("{}", pretty(&payload));
    Ok(if satisfied { 0 } else { 1 })
}
