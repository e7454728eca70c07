use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn curvflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvflow")).args(args).output().expect("spawn curvflow")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

#[test]
fn quadric_certifies_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a.json"), p(&dir, "b.json"));
    let args = ["quadric", "--n", "3", "--samples", "2000", "--restarts", "4", "--seed", "5"];
    let out = curvflow(&[&args[..], &["--out", &a]].concat());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&curvflow(&[&args[..], &["--out", &b]].concat())), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let report = json_file(Path::new(&a));
    assert_eq!(report["certified"], true);
    assert!(report["oracle_max_residual"].as_f64().unwrap() < 1e-9);
    assert!((report["min_lambda12"].as_f64().unwrap() - 4.0).abs() < 1e-6);
}

#[test]
fn quadric_rejects_small_n() {
    assert_eq!(code(&curvflow(&["quadric", "--n", "1"])), 2);
}

#[test]
fn ymflow_monopole_converges_immediately() {
    let dir = TempDir::new().unwrap();
    let (trace, report) = (p(&dir, "t.csv"), p(&dir, "r.json"));
    let out = curvflow(&[
        "ymflow", "--level", "3", "--degrees", "1,1", "--init", "monopole", "--trace", &trace, "--report", &report,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json_file(Path::new(&report));
    assert_eq!(r["converged"], true);
    assert_eq!(r["steps_taken"], 0);
    assert_eq!(r["splitting_type"], serde_json::json!([1, 1]));
    assert_eq!(r["degree"], 2);
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "step,time,energy,grad_norm,min_lambda12,eig_variance,degree");
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn ymflow_perturbed_start_recovers_splitting_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |tag: &str| {
        let (trace, report) = (p(&dir, &format!("{tag}.csv")), p(&dir, &format!("{tag}.json")));
        let out = curvflow(&[
            "ymflow", "--level", "2", "--degrees", "1,1", "--eps", "0.1", "--steps", "20000", "--seed", "3",
            "--record-every", "50", "--trace", &trace, "--report", &report,
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        (std::fs::read(trace).unwrap(), std::fs::read(report).unwrap())
    };
    let first = run("a");
    assert_eq!(first, run("b"));
    let r: Value = serde_json::from_slice(&first.1).unwrap();
    assert_eq!(r["splitting_type"], serde_json::json!([1, 1]));
    assert!(r["integrality_residual"].as_f64().unwrap() < 0.05);
    assert_eq!(r["energy_monotone"], true);
}

#[test]
fn ymflow_branch_guard_exits_three() {
    let out = curvflow(&["ymflow", "--level", "2", "--eps", "3.0"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("face"));
}

#[test]
fn ymflow_usage_errors() {
    assert_eq!(code(&curvflow(&["ymflow", "--level", "8"])), 2);
    assert_eq!(code(&curvflow(&["ymflow", "--rank", "9"])), 2);
    assert_eq!(code(&curvflow(&["ymflow", "--rank", "3", "--degrees", "1,1"])), 2);
    assert_eq!(code(&curvflow(&["ymflow", "--init", "bogus"])), 2);
}

#[test]
fn config_file_precedence_and_unknown_keys() {
    let dir = TempDir::new().unwrap();
    let cfg = p(&dir, "cfg.json");
    let report = p(&dir, "r.json");
    std::fs::write(&cfg, r#"{"level": 2, "init": "monopole", "degrees": [0, 2], "report": "unused.json"}"#).unwrap();
    // the flag overrides the report path and the degrees
    let out = curvflow(&["ymflow", "--config", &cfg, "--degrees", "1,1", "--report", &report]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json_file(Path::new(&report));
    assert_eq!(r["level"], 2);
    assert_eq!(r["splitting_type"], serde_json::json!([1, 1]));

    std::fs::write(&cfg, r#"{"level": 2, "colour": "blue"}"#).unwrap();
    assert_eq!(code(&curvflow(&["ymflow", "--config", &cfg])), 2);
}

#[test]
fn maxprin_monopole_passes() {
    let out = curvflow(&["maxprin", "--level", "2", "--init", "monopole", "--degrees", "1,1", "--steps", "50", "--tol", "1e-300"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["verdict"]["preserved"], true);
}

#[test]
fn maxprin_quasi_positive_start_becomes_positive() {
    let out = curvflow(&["maxprin", "--level", "3", "--init", "quasi", "--steps", "200", "--tol", "1e-300"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["initial_class"]["class"], "TWO_QUASI_POSITIVE");
    assert_eq!(r["verdict"]["quasi"]["status"], "pass");
}

#[test]
fn maxprin_flags_injected_decreasing_trace() {
    let dir = TempDir::new().unwrap();
    let trace = p(&dir, "bad.csv");
    let rows = [
        "step,time,energy,grad_norm,min_lambda12,eig_variance,degree",
        "0,0.0,1.0,1.0,1.0,0.0,2",
        "1,0.1,0.9,1.0,0.8,0.0,2",
        "2,0.2,0.8,1.0,0.5,0.0,2",
    ];
    std::fs::write(&trace, rows.join("\n") + "\n").unwrap();
    let out = curvflow(&["maxprin", "--level", "1", "--trace-in", &trace]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["verdict"]["preserved"], false);
    assert_eq!(r["source"], "trace-in");
}

#[test]
fn maxprin_rejects_rank_one() {
    assert_eq!(code(&curvflow(&["maxprin", "--rank", "1", "--init", "flat"])), 2);
}

#[test]
fn cert_exit_codes() {
    let out = curvflow(&["cert", "--n", "3", "--splitting", "-1,2,2", "--k", "0"]);
    assert_eq!(code(&out), 0);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["degree_sum"], 3);

    assert_eq!(code(&curvflow(&["cert", "--n", "3", "--splitting", "0,0,2"])), 1);
    assert_eq!(code(&curvflow(&["cert", "--n", "2", "--splitting", "1,1"])), 2);
    assert_eq!(code(&curvflow(&["cert", "--n", "3", "--splitting", "1,x,2"])), 2);
}

#[test]
fn thread_count_from_environment() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_curvflow"))
            .env("CURVFLOW_THREADS", v)
            .args(["cert", "--n", "3", "--splitting", "-1,2,2"])
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("1")), 0);
    assert_eq!(code(&run("0")), 2);
    assert_eq!(code(&run("many")), 2);
}
