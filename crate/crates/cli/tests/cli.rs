use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cans(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cans")).args(args).output().expect("spawn cans")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn data(name: &str) -> String {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    root.to_str().unwrap().to_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn numbers(text: &str) -> Vec<f64> {
    text.split_whitespace().map(|t| t.parse().unwrap()).collect()
}

fn coeffs(v: &Value) -> Vec<f64> {
    v["coeffs"].as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).collect()
}

#[test]
fn remez_cubic_matches_closed_form() {
    let v = json_of(&cans(&["remez", "--a", "0.5", "--b", "1", "--degree", "3"]));
    assert!((v["epsilon"].as_f64().unwrap() - 0.085952).abs() < 1e-5);
    assert_eq!(coeffs(&v).len(), 2);
}

#[test]
fn remez_degenerate_interval() {
    let v = json_of(&cans(&["remez", "--a", "1", "--b", "1", "--degree", "3"]));
    let c = coeffs(&v);
    assert!((c[0] - 1.5).abs() < 1e-12 && (c[1] + 0.5).abs() < 1e-12, "{c:?}");
    assert!(v["epsilon"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn remez_rejects_bad_input() {
    assert_eq!(cans(&["remez", "--a", "0", "--b", "1", "--degree", "3"]).status.code(), Some(2));
    assert_eq!(cans(&["remez", "--a", "0.5", "--b", "1", "--degree", "4"]).status.code(), Some(2));
    assert_eq!(cans(&["remez", "--a", "0.7", "--b", "0.5", "--degree", "3"]).status.code(), Some(2));
    assert_eq!(cans(&["remez", "--a", "0.5"]).status.code(), Some(2));
}

#[test]
fn exact_schedule_squares_the_error() {
    let v = json_of(&cans(&["schedule", "--mode", "exact", "--a", "0.5", "--b", "1", "--degrees", "3,3"]));
    let e: Vec<f64> = v["entries"].as_array().unwrap().iter().map(|e| e["epsilon"].as_f64().unwrap()).collect();
    assert_eq!(e.len(), 2);
    assert!(e[1] <= e[0] * e[0], "{e:?}");
    assert_eq!(v["total_matmuls"], 4);
}

#[test]
fn exact_schedule_to_target() {
    let v = json_of(&cans(&["schedule", "--mode", "exact", "--a", "0.01", "--degrees", "3", "--target", "1e-8"]));
    assert!(v["final_epsilon"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn delta_schedule_seven_cubics() {
    let v = json_of(&cans(&["schedule", "--mode", "delta", "--delta", "0.3", "--degrees", "3,3,3,3,3,3,3"]));
    assert_eq!(v["total_matmuls"], 14);
    assert_eq!(v["certificate"]["contained"], true);
    assert!(v["a_reach"].as_f64().unwrap() < 0.01);
}

#[test]
fn maxderiv_single_stage() {
    let v = json_of(&cans(&["schedule", "--mode", "maxderiv", "--delta", "0.3", "--degrees", "3", "--iters", "1"]));
    assert_eq!(v["entries"].as_array().unwrap().len(), 1);
    assert_eq!(v["certificate"]["contained"], true);
    assert!(v["left"].as_f64().unwrap() < 0.7);
}

#[test]
fn schedule_requires_its_parameters() {
    assert_eq!(cans(&["schedule", "--mode", "delta", "--degrees", "3"]).status.code(), Some(2));
    assert_eq!(cans(&["schedule", "--mode", "exact", "--a", "0.5"]).status.code(), Some(2));
}

#[test]
fn emitted_schedules_verify() {
    let dir = TempDir::new().unwrap();
    let cases: [&[&str]; 3] = [
        &["--mode", "delta", "--delta", "0.3", "--degrees", "5,5,5,5"],
        &["--mode", "delta", "--delta", "0.01", "--degrees", "3,3,3,3,3,3"],
        &["--mode", "maxderiv", "--delta", "0.3", "--degrees", "3", "--iters", "4"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let out = dir.path().join(format!("s{i}.json"));
        let mut full = vec!["schedule"];
        full.extend_from_slice(args);
        full.extend_from_slice(&["--out", s(&out)]);
        assert!(cans(&full).status.success());
        let v = json_of(&cans(&["verify", "--coeffs", s(&out)]));
        assert_eq!(v["contained"], true, "{args:?}: {v}");
    }
}

#[test]
fn verify_published_lists() {
    let v = json_of(&cans(&["verify", "--coeffs", &data("cans-d0.3-cubic-x7.json")]));
    assert_eq!(v["contained"], true);
    assert_eq!(v["matmuls"], 14);
    // Muon carries no delta label; a generous one must still be checkable.
    let v = json_of(&cans(&["verify", "--coeffs", &data("muon-quintic-x5.json"), "--delta", "0.5"]));
    assert!(v["max_value"].as_f64().unwrap() > 1.0);
}

#[test]
fn verify_fails_outside_the_band() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "ns.json", "[[1.5, -0.5]]");
    let out = cans(&["verify", "--coeffs", s(&f), "--delta", "0.01", "--right", "1.8"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["contained"], false);
}

#[test]
fn orthogonalize_identity_and_diagonal() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o.txt");
    let id = write(&dir, "id.txt", "3 3\n1 0 0\n0 1 0\n0 0 1\n");
    let v = json_of(&cans(&["orthogonalize", "--input", s(&id), "--output", s(&out), "--a-hint", "0.9"]));
    assert!(v["fro_err"].as_f64().unwrap() < 1e-6);

    let d = write(&dir, "d.txt", "2 2\n0.5 0\n0 1\n");
    let trace = dir.path().join("t.csv");
    let v = json_of(&cans(&[
        "orthogonalize",
        "--input",
        s(&d),
        "--output",
        s(&out),
        "--a-hint",
        "0.5",
        "--oracle",
        "--trace-out",
        s(&trace),
    ]));
    assert!(v["spec_err"].as_f64().unwrap() <= 1e-6);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("2 2\n"));
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("iter,matmuls,fro_err,spec_err\n"));
}

#[test]
fn orthogonalize_needs_an_interval() {
    let dir = TempDir::new().unwrap();
    let d = write(&dir, "d.txt", "2 2\n0.5 0\n0 1\n");
    let out = dir.path().join("o.txt");
    assert_eq!(cans(&["orthogonalize", "--input", s(&d), "--output", s(&out)]).status.code(), Some(2));
    let bad = write(&dir, "bad.txt", "2 2\n1 2\n");
    assert_eq!(
        cans(&["orthogonalize", "--input", s(&bad), "--output", s(&out), "--a-hint", "0.5"]).status.code(),
        Some(2)
    );
}

#[test]
fn orthogonalize_with_delta_and_schedule_file() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.txt", "3 2\n1 0.2\n0.1 0.3\n0 0.5\n");
    let out = dir.path().join("o.txt");
    let v = json_of(&cans(&["orthogonalize", "--input", s(&a), "--output", s(&out), "--delta", "0.3", "--oracle"]));
    assert!(v["spec_err"].as_f64().unwrap() <= 1e-6);

    let sched = dir.path().join("s.json");
    assert!(cans(&[
        "schedule",
        "--mode",
        "exact",
        "--a",
        "0.05",
        "--degrees",
        "5",
        "--target",
        "1e-9",
        "--out",
        s(&sched)
    ])
    .status
    .success());
    let v = json_of(&cans(&[
        "orthogonalize",
        "--input",
        s(&a),
        "--output",
        s(&out),
        "--schedule",
        s(&sched),
        "--normalization",
        "spectral",
        "--oracle",
    ]));
    assert!(v["spec_err"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn bench_is_deterministic() {
    let args = ["bench", "--n", "48", "--methods", "ns,cans3,cans5,delta-preproc"];
    let a = cans(&args);
    let b = cans(&["--parallel", args[0], args[1], args[2], args[3], args[4]]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.matches("# method=").count(), 4);
}

#[test]
fn bench_refuses_oracle_beyond_cap() {
    assert_eq!(cans(&["bench", "--n", "600"]).status.code(), Some(1));
    assert_eq!(cans(&["bench", "--n", "5000", "--no-oracle"]).status.code(), Some(2));
}

#[test]
fn retract_zero_step_and_bad_point() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.txt", "3 2\n1 0\n0 1\n0 0\n");
    let xi = write(&dir, "xi.txt", "3 2\n0.1 0.2\n-0.3 0.1\n0.5 0.4\n");
    let out = dir.path().join("r.txt");
    let v = json_of(&cans(&["retract", "--x", s(&x), "--xi", s(&xi), "--alpha", "0", "--output", s(&out)]));
    assert!(v["residual"].as_f64().unwrap() < 1e-15);
    assert_eq!(numbers(&std::fs::read_to_string(&out).unwrap()), numbers(&std::fs::read_to_string(&x).unwrap()));

    let v = json_of(&cans(&["retract", "--x", s(&x), "--xi", s(&xi), "--alpha", "0.5", "--output", s(&out)]));
    let e = v["epsilon"].as_f64().unwrap();
    assert!(v["sigma1_bound"].as_f64().unwrap() >= 1.0);
    assert!((v["spectral_bound"].as_f64().unwrap() - (2.0 * e + e * e)).abs() < 1e-15);

    let bad = write(&dir, "bad.txt", "3 2\n2 0\n0 1\n0 0\n");
    assert_eq!(
        cans(&["retract", "--x", s(&bad), "--xi", s(&xi), "--alpha", "0.1", "--output", s(&out)]).status.code(),
        Some(1)
    );
}
