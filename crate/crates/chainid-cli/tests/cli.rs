//! End-to-end subcommand tests against the compiled binary.

use std::fs;
use std::process::{Command, Output};

use tempfile::TempDir;

fn chainid() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chainid"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

/// Three variables, two components {0,1} and {2}, one arrow into 2 with
/// coefficient 1.2 on variable 0, one undirected edge inside {0,1}.
fn fixture_cov() -> String {
    serde_json::json!({
        "dim": 3,
        "labels": [0, 1, 2],
        "entries": [
            0.8,  0.3,    0.96,
            0.3,  0.9125, 0.36,
            0.96, 0.36,   1.792
        ],
    })
    .to_string()
}

#[test]
fn generate_writes_model_graph_cov_and_data() {
    let dir = TempDir::new().unwrap();
    let out = run(chainid()
        .args(["generate", "--n-vars", "8", "--components", "3"])
        .args(["--seed", "7", "--samples", "50"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["sem.json", "graph.json", "cov.json", "data.csv"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }

    let sem: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sem.json")).unwrap()).unwrap();
    assert_eq!(sem["graph"]["n"], 8);
    assert_eq!(sem["graph"]["components"].as_array().unwrap().len(), 3);

    let csv = fs::read_to_string(dir.path().join("data.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x0,x1,x2,x3,x4,x5,x6,x7");
    assert_eq!(lines.count(), 50);
}

#[test]
fn generate_is_deterministic_in_the_seed() {
    let (a, b, c) = (TempDir::new().unwrap(), TempDir::new().unwrap(), TempDir::new().unwrap());
    for (dir, seed) in [(&a, "11"), (&b, "11"), (&c, "12")] {
        let out = run(chainid()
            .args(["generate", "--n-vars", "6", "--components", "2", "--seed", seed])
            .arg("--out-dir")
            .arg(dir.path()));
        assert!(out.status.success());
    }
    let read = |d: &TempDir| fs::read_to_string(d.path().join("sem.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn generate_rejects_more_components_than_variables() {
    let dir = TempDir::new().unwrap();
    let out = run(chainid()
        .args(["generate", "--n-vars", "10", "--components", "11"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert!(err["error"]["message"].is_string());
}

#[test]
fn certified_instance_passes_verify() {
    let dir = TempDir::new().unwrap();
    let out = run(chainid()
        .args(["generate", "--n-vars", "8", "--components", "2", "--seed", "3"])
        .args(["--certified", "--margin", "0.3"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let sem = dir.path().join("sem.json");
    let out = run(chainid()
        .arg("verify")
        .arg("--sem")
        .arg(&sem)
        .args(["--margin", "0.29"]));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["satisfied"], true);

    // same model, unreachable margin: clean failure exit, not an error
    let out = run(chainid()
        .arg("verify")
        .arg("--sem")
        .arg(&sem)
        .args(["--margin", "10.0"]));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["satisfied"], false);
}

#[test]
fn learn_known_recovers_order_and_edges_on_fixture() {
    let dir = TempDir::new().unwrap();
    let cov = dir.path().join("cov.json");
    let comps = dir.path().join("components.json");
    fs::write(&cov, fixture_cov()).unwrap();
    fs::write(&comps, "[[0, 1], [2]]").unwrap();

    let out = run(chainid()
        .arg("learn")
        .arg("--cov")
        .arg(&cov)
        .arg("--known")
        .arg(&comps));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = stdout_json(&out);
    assert_eq!(res["mode"], "known_order");
    assert_eq!(res["order"], serde_json::json!([0, 1]));
    assert_eq!(res["partition"], serde_json::json!([[0, 1], [2]]));
    assert_eq!(res["graph"]["directed_edges"], serde_json::json!([[0, 2]]));
    assert_eq!(res["graph"]["undirected_edges"], serde_json::json!([[0, 1]]));
}

#[test]
fn learn_unknown_minimizers_agree() {
    let dir = TempDir::new().unwrap();
    let out = run(chainid()
        .args(["generate", "--n-vars", "8", "--components", "2", "--seed", "21"])
        .arg("--certified")
        .arg("--out-dir")
        .arg(dir.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let cov = dir.path().join("cov.json");
    let brute = run(chainid().arg("learn").arg("--cov").arg(&cov).args(["--sfm", "brute"]));
    let mnp = run(chainid().arg("learn").arg("--cov").arg(&cov).args(["--sfm", "mnp"]));
    assert!(brute.status.success());
    assert!(mnp.status.success());
    assert_eq!(brute.stdout, mnp.stdout);

    let res = stdout_json(&brute);
    assert_eq!(res["mode"], "unknown_partition");
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("graph.json")).unwrap()).unwrap();
    let mut found: Vec<serde_json::Value> = res["partition"].as_array().unwrap().clone();
    let mut expected: Vec<serde_json::Value> = truth["components"].as_array().unwrap().clone();
    found.sort_by_key(|v| v.to_string());
    expected.sort_by_key(|v| v.to_string());
    assert_eq!(found, expected);
}

#[test]
fn learn_requires_exactly_one_input_source() {
    let out = run(chainid().arg("learn"));
    assert_eq!(out.status.code(), Some(2));

    let dir = TempDir::new().unwrap();
    let cov = dir.path().join("cov.json");
    fs::write(&cov, fixture_cov()).unwrap();
    let out = run(chainid()
        .arg("learn")
        .arg("--cov")
        .arg(&cov)
        .args(["--data", "also.csv"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn learn_from_samples_matches_population_structure() {
    let dir = TempDir::new().unwrap();
    let out = run(chainid()
        .args(["generate", "--n-vars", "6", "--components", "2", "--seed", "17"])
        .args(["--certified", "order", "--samples", "20000"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(chainid()
        .arg("learn")
        .arg("--data")
        .arg(dir.path().join("data.csv"))
        .arg("--known")
        .arg(dir.path().join("graph.json")));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = stdout_json(&out);

    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("graph.json")).unwrap()).unwrap();
    assert_eq!(res["graph"]["directed_edges"], truth["directed_edges"]);
    assert_eq!(res["graph"]["undirected_edges"], truth["undirected_edges"]);
}

#[test]
fn eval_scores_result_against_truth() {
    let dir = TempDir::new().unwrap();
    let cov = dir.path().join("cov.json");
    let comps = dir.path().join("components.json");
    let truth = dir.path().join("truth.json");
    fs::write(&cov, fixture_cov()).unwrap();
    fs::write(&comps, "[[0, 1], [2]]").unwrap();
    fs::write(
        &truth,
        serde_json::json!({
            "n": 3,
            "components": [[0, 1], [2]],
            "directed_edges": [[0, 2]],
            "undirected_edges": [[0, 1]],
        })
        .to_string(),
    )
    .unwrap();

    let out = run(chainid()
        .arg("learn")
        .arg("--cov")
        .arg(&cov)
        .arg("--known")
        .arg(&comps));
    assert!(out.status.success());
    let result = dir.path().join("result.json");
    fs::write(&result, &out.stdout).unwrap();

    let out = run(chainid()
        .arg("eval")
        .arg("--result")
        .arg(&result)
        .arg("--truth")
        .arg(&truth));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["partition_correct"], true);
    assert_eq!(report["order_correct"], true);
    assert_eq!(report["shd"], 0);
}

#[test]
fn bench_summaries_are_independent_of_jobs() {
    let (d1, d4) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for (dir, jobs) in [(&d1, "1"), (&d4, "4")] {
        let out = run(chainid()
            .args(["bench", "--d", "6,8", "--trials", "2", "--seed", "5"])
            .args(["--mode", "population", "--algorithm", "known", "--jobs", jobs])
            .arg("--out-dir")
            .arg(dir.path()));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["summary.json", "summary.csv"] {
        let a = fs::read(d1.path().join(name)).unwrap();
        let b = fs::read(d4.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between --jobs 1 and --jobs 4");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d4.path().join("summary_meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["jobs"], 4);
    assert!(meta["timing"]["groups"][0]["mean_seconds"].is_number());
}

#[test]
fn seed_env_var_overrides_flag() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let out = run(chainid()
        .args(["generate", "--n-vars", "6", "--components", "2", "--seed", "1"])
        .arg("--out-dir")
        .arg(a.path()));
    assert!(out.status.success());
    let out = run(chainid()
        .args(["generate", "--n-vars", "6", "--components", "2", "--seed", "999"])
        .arg("--out-dir")
        .arg(b.path())
        .env("CHAINID_SEED", "1"));
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(a.path().join("sem.json")).unwrap(),
        fs::read_to_string(b.path().join("sem.json")).unwrap()
    );
}

#[test]
fn missing_input_file_is_a_runtime_error() {
    let out = run(chainid().arg("learn").args(["--cov", "/nonexistent/cov.json"]));
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert!(err["error"]["message"].is_string());
}
