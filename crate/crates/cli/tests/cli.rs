use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specpreserve"))
}

fn jobs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("jobs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Row-major `(re, im)` entries of a matrix file.
fn entries(v: &Value) -> Vec<(f64, f64)> {
    v["data"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| match e {
            Value::Array(p) => (p[0].as_f64().unwrap(), p[1].as_f64().unwrap()),
            x => (x.as_f64().unwrap(), 0.0),
        })
        .collect()
}

fn max_diff(got: &[(f64, f64)], want: &[(f64, f64)]) -> f64 {
    assert_eq!(got.len(), want.len());
    got.iter().zip(want).map(|(a, b)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).fold(0.0, f64::max)
}

fn reals(v: &[f64]) -> Vec<(f64, f64)> {
    v.iter().map(|&x| (x, 0.0)).collect()
}

fn write_job(dir: &Path, name: &str, job: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, job).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn lie_hermitian_job_reproduces_printed_delta() {
    let tmp = tempfile::tempdir().unwrap();
    let job = jobs().join("lie_hermitian_family/job.json");
    let o = run(&["reassign", s(&job), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let want = [
        (-0.13762, -1.22005), (-0.65838, 0.51555), (-0.12923, 0.84764), (0.0, 1.62647),
        (0.72270, -0.48518), (0.10142, -0.64947), (-0.63261, 0.0), (-0.84764, 0.12923),
        (0.02135, 0.28537), (-0.72900, 0.0), (-0.10142, -0.64947), (0.51555, -0.65838),
        (0.0, 0.85994), (0.28537, 0.02135), (0.48518, -0.72270), (0.13762, -1.22005),
    ];
    let got = entries(&read(&tmp.path().join("delta_a.json")));
    assert!(max_diff(&got, &want) < 2e-4);
    let report = read(&tmp.path().join("report.json"));
    assert!(report["perturbation"]["reassigned_residual"].as_f64().unwrap() < 1e-3);
    assert!(report["perturbation"]["structure_residual"].as_f64().unwrap() < 1e-3);
    assert!(tmp.path().join("a_plus_delta.json").exists());
}

#[test]
fn real_selfadjoint_job_reproduces_printed_delta_and_fixed_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    let job = jobs().join("real_selfadjoint_no_spillover/job.json");
    let o = run(&["reassign", s(&job), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let want = reals(&[
        -0.647698, -1.627577, -1.550473, -1.527484, 2.142323,
        -0.147615, -4.049645, -2.545965, 1.524353, 3.829506,
        0.432213, 2.545140, 1.893505, 0.109324, -2.759969,
        1.566449, -1.994170, -0.088048, 2.000580, 0.059502,
        -0.268251, -3.458913, -2.323848, 0.444879, 3.406128,
    ]);
    let delta = read(&tmp.path().join("delta_a.json"));
    assert_eq!(delta["field"], "real");
    assert!(max_diff(&entries(&delta), &want) < 2e-4);
    let report = read(&tmp.path().join("report.json"));
    assert!(report["perturbation"]["fixed_residual"].as_f64().unwrap() < 1e-3);
    assert_eq!(report["perturbation"]["spectrum_verdict"]["passed"], true);
}

#[test]
fn symmetric_invariant_job_reproduces_printed_delta() {
    let tmp = tempfile::tempdir().unwrap();
    let job = jobs().join("symmetric_no_spillover/job.json");
    let o = run(&["invariant", s(&job), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let want = reals(&[2.50934, 1.60757, -1.17472, 1.60757, 1.27089, -0.97390, -1.17472, -0.97390, 0.75318]);
    assert!(max_diff(&entries(&read(&tmp.path().join("delta_a.json"))), &want) < 2e-4);
    assert_eq!(read(&tmp.path().join("report.json"))["rank"], 2);
}

#[test]
fn inspect_reports_membership_and_pairing() {
    let job = jobs().join("lie_hermitian_family/job.json");
    let o = run(&["inspect", s(&job)]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("member of lie"));
    assert!(out.lines().any(|l| l.contains("member of lie") && l.trim_end().ends_with("true")));
    assert!(out.contains("2.726464+1.454623i"));
    assert!(out.contains("-2.726464+1.454623i"));

    let tmp = tempfile::tempdir().unwrap();
    let job = write_job(
        tmp.path(),
        "job.json",
        r#"{"a": {"rows": 2, "cols": 2, "field": "real", "data": [1, 2, 3, 4]}, "space": {"kind": "identity"}, "class": "jordan"}"#,
    );
    let o = run(&["inspect", s(&job), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0);
    let report = read(&tmp.path().join("report.json"));
    assert_eq!(report["membership"][0]["member"], false);
    // ||A^T - A||_F = sqrt(2) * 1
    assert!((report["membership"][0]["residual"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn zero_move_gives_zero_delta() {
    let tmp = tempfile::tempdir().unwrap();
    let job = write_job(
        tmp.path(),
        "job.json",
        r#"{"a": {"rows": 2, "cols": 2, "field": "real", "data": [2, 1, 1, 3]},
            "space": {"kind": "identity"}, "class": "jordan",
            "x_c": {"rows": 2, "cols": 2, "field": "real", "data": [1, 0, 0, 1]},
            "lambda_c": {"rows": 2, "cols": 2, "field": "real", "data": [2, 1, 1, 3]},
            "lambda_a": {"rows": 2, "cols": 2, "field": "real", "data": [2, 1, 1, 3]}}"#,
    );
    let o = run(&["reassign", s(&job), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(entries(&read(&tmp.path().join("delta_a.json"))).iter().all(|&(re, im)| re == 0.0 && im == 0.0));
}

#[test]
fn incompatible_lambda_in_reproduce_mode_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    // H = I, symmetric A; a non-symmetric Lambda cannot satisfy X^T X Lambda = Lambda^T X^T X for X = I
    let job = write_job(
        tmp.path(),
        "job.json",
        r#"{"a": {"rows": 2, "cols": 2, "field": "real", "data": [1, 0, 0, 2]},
            "space": {"kind": "identity"}, "class": "jordan", "mode": "reproduce",
            "x_a": {"rows": 2, "cols": 2, "field": "real", "data": [1, 0, 0, 1]},
            "lambda_a": {"rows": 2, "cols": 2, "field": "real", "data": [1, 1, 0, 1]}}"#,
    );
    let o = run(&["invariant", s(&job), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2);
    let out = stdout(&o);
    let line = out.lines().find(|l| l.contains("condition residual")).unwrap();
    let printed: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
    let report = read(&tmp.path().join("report.json"));
    let value = report["compatibility"]["residual"].as_f64().unwrap();
    assert_eq!(report["compatibility"]["compatible"], false);
    // ||Lambda - Lambda^T||_F
    assert!((value - 2f64.sqrt()).abs() < 1e-12);
    assert!((printed - value).abs() < 1e-6);
    assert!(String::from_utf8_lossy(&o.stderr).contains("X^* H X Lambda"));
}

#[test]
fn compatible_reproduce_on_generated_instance() {
    let tmp = tempfile::tempdir().unwrap();
    let gen = run(&["gen", s(&jobs().join("hamiltonian_gen/job.json")), "--out", s(tmp.path())]);
    assert_eq!(code(&gen), 0);
    let truth = read(&tmp.path().join("truth.json"));
    // an eigenvector of a nonzero real eigenvalue is H-neutral, so any real Lambda_a is compatible
    let pair = truth["pairs"].as_array().unwrap().iter().find(|p| p["lambda"][1] == 0.0).unwrap();
    let chain = &pair["chain"];
    let job = format!(
        r#"{{"a": "a.json", "space": {{"file": "h.json"}}, "class": "lie", "mode": "reproduce",
            "x_a": {chain}, "lambda_a": [[0.75, 0.0]]}}"#
    );
    let job = write_job(tmp.path(), "job.json", &job);
    let out = tmp.path().join("inv");
    let o = run(&["invariant", s(&job), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read(&out.join("report.json"));
    assert!(report["interpolation_residual"].as_f64().unwrap() < 1e-10);
    assert!(report["structure_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn pairing_closure_is_enforced_unless_completion_is_requested() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["gen", s(&jobs().join("hamiltonian_gen/job.json")), "--out", s(tmp.path())])), 0);
    let job = write_job(
        tmp.path(),
        "job.json",
        r#"{"a": "a.json", "space": {"file": "h.json"}, "class": "lie", "mode": "no-spillover",
            "targets": [[[0.5, 0.0], [0.8, 0.0]]]}"#,
    );
    let out = tmp.path().join("r");
    let o = run(&["reassign", s(&job), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("pairing"));
    let o = run(&["reassign", s(&job), "--out", s(&out), "--complete-pairing"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read(&out.join("report.json"));
    assert_eq!(report["groups"].as_array().unwrap().len(), 2);
    assert_eq!(report["perturbation"]["spectrum_verdict"]["passed"], true);
}

#[test]
fn same_seed_gives_identical_files() {
    let job = jobs().join("hamiltonian_gen/job.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        assert_eq!(code(&run(&["gen", s(&job), "--seed", seed, "--out", s(dir.path())])), 0);
    }
    for f in ["a.json", "h.json", "truth.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
    assert_ne!(fs::read(a.path().join("a.json")).unwrap(), fs::read(c.path().join("a.json")).unwrap());

    let job = jobs().join("lie_hermitian_family/job.json");
    let outs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for o in &outs {
        let r = run(&["reassign", s(&job), "--z", "random", "--seed", "9", "--out", s(o.path())]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    }
    for f in ["delta_a.json", "a_plus_delta.json", "report.json"] {
        assert_eq!(fs::read(outs[0].path().join(f)).unwrap(), fs::read(outs[1].path().join(f)).unwrap());
    }
}

#[test]
fn infeasible_plan_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    // self-adjoint for a definite form forces real eigenvalues
    let job = write_job(
        tmp.path(),
        "job.json",
        r#"{"recipe": {"space": {"kind": "identity"}, "star": "ct", "field": "complex", "class": "jordan",
            "plan": [{"lambda": [0.0, 1.0], "sizes": [1]}], "seed": 1}}"#,
    );
    let o = run(&["gen", s(&job), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn input_problems_exit_3() {
    assert_eq!(code(&run(&["reassign", "/nonexistent/job.json"])), 3);
    assert_eq!(code(&run(&["reassign"])), 3);
    assert_eq!(code(&run(&["inspect", "x.json", "--class", "other"])), 3);
    assert_eq!(code(&run(&["--help"])), 0);

    let tmp = tempfile::tempdir().unwrap();
    let job = write_job(tmp.path(), "job.json", r#"{"a": {"rows": 2, "cols": 2, "field": "real", "data": [1, 2, 3]}, "space": {"kind": "identity"}}"#);
    assert_eq!(code(&run(&["inspect", s(&job)])), 3);
    let job = write_job(tmp.path(), "bad.json", "{ not json");
    assert_eq!(code(&run(&["inspect", s(&job)])), 3);
}

#[test]
fn matrix_market_input_is_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("a.mtx"), "%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n1 1 2.0\n2 1 1.0\n3 3 -1.0\n3 2 0.5\n").unwrap();
    let job = write_job(tmp.path(), "job.json", r#"{"a": "a.mtx", "space": {"kind": "identity"}, "class": "jordan"}"#);
    let o = run(&["inspect", s(&job), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read(&tmp.path().join("report.json"));
    assert_eq!(report["membership"][0]["member"], true);
    assert_eq!(report["pairing"].as_array().unwrap().len(), 3);
}
