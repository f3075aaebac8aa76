use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use accform::numerics::linalg::{diag_real, from_real_rows, identity, real};
use accform::RawProblem;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_accform"));
    c.env_remove("ACCFORM_TOL_RANK");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const MULTIVAL: &str = r#"{"dim_V": 2, "dim_H": 1,
  "T0": [[[0,0],[1,0]],[[-1,0],[0,0]]],
  "J": [[[0,0],[1,0]]]}"#;

fn dirichlet(n: usize) -> String {
    let h = 1.0 / (n + 1) as f64;
    let mut t0 = identity(n) * real(2.0 / h);
    for k in 0..n - 1 {
        t0[(k, k + 1)] = real(-1.0 / h);
        t0[(k + 1, k)] = real(-1.0 / h);
    }
    let mut p = RawProblem::plain(t0, identity(n));
    p.gram_h = Some(diag_real(&vec![h; n]));
    p.to_json()
}

#[test]
fn multival_is_not_associated() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "multival.json", MULTIVAL);
    let o = run(&["analyze", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let r = json(&o);
    assert_eq!(r["association"]["verdict"], "fails");
    let w = &r["association"]["witness"];
    assert!((w[0][0].as_f64().unwrap().abs() - 1.0).abs() < 1e-12);
    assert!(w[1][0].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(r["conditions"]["condition_iii"]["verdict"], "holds");
    assert!(r["input_digest"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn welldef_restricted_to_e3() {
    let o = run(&["gallery", "welldef_nonmacc_truncated", "--param", "N=3", "--restrict", "e3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    let a = r["analysis"]["operator"]["matrix"][0][0][0].as_f64().unwrap();
    assert!((a - 4.0 / 3.0).abs() <= 1e-12);
}

#[test]
fn missing_file_and_bad_usage_exit_2() {
    assert_eq!(run(&["analyze", "nosuchfile.json"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["gallery", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["gallery", "multival", "--param", "N=2"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "x.json", "--json", "--text"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_problem_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.json", r#"{"dim_V": 2, "dim_H": 1, "T0": [[[0,0]]], "J": [[[1,0],[0,0]]]}"#);
    assert_eq!(run(&["analyze", f.to_str().unwrap()]).status.code(), Some(2));
    let f = write(dir.path(), "extra.json", &MULTIVAL.replace("\"dim_H\"", "\"colour\": 1, \"dim_H\""));
    assert_eq!(run(&["analyze", f.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_and_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "d.json", &dirichlet(6));
    let a = run(&["analyze", f.to_str().unwrap()]);
    let b = run(&["analyze", f.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let out = dir.path().join("report.json");
    let c = run(&["analyze", f.to_str().unwrap(), "--report", out.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0));
    assert!(c.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 2);
}

#[test]
fn report_round_trips_through_the_library_type() {
    let o = run(&["gallery", "invar_block"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    let analysis: accform::report::AnalysisReport = serde_json::from_value(r["analysis"].clone()).unwrap();
    assert_eq!(serde_json::to_value(&analysis).unwrap(), r["analysis"]);
    assert_eq!(r["case"]["passed"], true);
}

#[test]
fn generate_then_analyze_recovers_the_operator() {
    let dir = tempfile::tempdir().unwrap();
    let op = write(dir.path(), "op.json", r#"{"dim_H": 2, "A": [[[2,0],[1,0]],[[-1,0],[1,0]]]}"#);
    let o = run(&["generate", op.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let g = json(&o);
    let p = write(dir.path(), "p.json", &serde_json::to_string(&g["problem"]).unwrap());
    let a = json(&run(&["analyze", p.to_str().unwrap()]));
    let m = &a["operator"]["matrix"];
    let expected = from_real_rows(&[&[2.0, 1.0], &[-1.0, 1.0]]);
    for i in 0..2 {
        for j in 0..2 {
            assert!((m[i][j][0].as_f64().unwrap() - expected[(i, j)].re).abs() < 1e-10);
        }
    }
}

#[test]
fn generate_rejects_non_accretive_operators() {
    let dir = tempfile::tempdir().unwrap();
    let op = write(dir.path(), "op.json", r#"{"dim_H": 1, "A": [[[-1,0]]]}"#);
    assert_eq!(run(&["generate", op.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn invariance_orthant_and_subspace() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "d.json", &dirichlet(8));
    let o = run(&["invariance", f.to_str().unwrap(), "--set", "orthant", "--lambdas", "0.5,1,2", "--times", "0.1,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["operator"]["equivalent"], true);
    assert_eq!(r["options"]["lambdas"], serde_json::json!([0.5, 1.0, 2.0]));

    // span{e1} is not invariant under the discrete Laplacian
    let s = write(dir.path(), "s.json", r#"{"vectors": [[[1,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0]]]}"#);
    let spec = format!("subspace:{}", s.display());
    let o = run(&["invariance", f.to_str().unwrap(), "--set", &spec]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["invariance", f.to_str().unwrap(), "--set", "ball"]).status.code(), Some(2));
}

#[test]
fn approx_experiment_runs() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "d.json", &dirichlet(4));
    let c = write(dir.path(), "c.json", r#"{"family": "scaled_identity", "theta": 0.0, "n_max": 256}"#);
    let o = run(&["approx", f.to_str().unwrap(), "--config", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    let errors = r["report"]["errors"].as_array().unwrap();
    let bounds = r["report"]["bounds"].as_array().unwrap();
    assert_eq!(errors.len(), 9);
    for (e, b) in errors.iter().zip(bounds) {
        assert!(e.as_f64().unwrap() <= b.as_f64().unwrap() + 1e-10);
    }
}

#[test]
fn fov_of_hermitian_t_is_a_segment() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "d.json", &dirichlet(5));
    let o = run(&["fov", f.to_str().unwrap(), "--angles", "64"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    let pts = r["t"]["boundary_points"].as_array().unwrap();
    assert!(pts.iter().all(|p| p[1].as_f64().unwrap().abs() < 1e-8));
    assert_eq!(r["operator_sectoriality"]["certificate"]["verdict"], "holds");
    assert_eq!(run(&["fov", f.to_str().unwrap(), "--angles", "3"]).status.code(), Some(2));
}

#[test]
fn tolerance_flags_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "m.json", MULTIVAL);
    let r = json(&run(&["analyze", f.to_str().unwrap(), "--tol-residual", "1e-7"]));
    assert_eq!(r["conditions"]["condition_i"]["tolerance"].as_f64(), Some(1e-7));
    let o = bin().args(["analyze", f.to_str().unwrap()]).env("ACCFORM_TOL_RANK", "1e-6").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin().args(["analyze", f.to_str().unwrap()]).env("ACCFORM_TOL_RANK", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["analyze", f.to_str().unwrap(), "--tol-rank", "-1"]).status.code(), Some(2));
}

#[test]
fn text_output() {
    let o = run(&["gallery", "multival", "--text"]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("not_associated") && s.contains("associated             Fails"));
}

#[test]
fn in_process_run_matches_binary() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = accform_cli::run(["accform", "gallery", "zero_form_rank1"], &mut out, &mut err);
    assert_eq!(code, 0);
    assert_eq!(out, run(&["gallery", "zero_form_rank1"]).stdout);
}
