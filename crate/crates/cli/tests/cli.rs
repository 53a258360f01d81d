use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qpp_cli::matrix_file::MatrixFile;
use qpp_core::{CMatrix, C64};
use serde_json::Value;

const H: f64 = 0.853_553_390_593_273_7;
const L: f64 = 0.146_446_609_406_726_3;
const X: f64 = 0.353_553_390_593_273_8;

fn qpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpp"))
        .args(args)
        .env_remove("QPP_EQ_TOL")
        .env_remove("QPP_RANK_TOL")
        .env_remove("QPP_SPEC_TOL")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, m: &CMatrix) -> String {
    let path: PathBuf = dir.join(name);
    MatrixFile::from_matrix(m, None).write(&path).unwrap();
    path.to_str().unwrap().to_owned()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn output_matrix(r: &Value, name: &str) -> CMatrix {
    let m = r["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["name"] == name)
        .unwrap_or_else(|| panic!("no output {name}"));
    serde_json::from_value::<MatrixFile>(m.clone())
        .unwrap()
        .to_matrix()
        .unwrap()
}

fn near(a: &CMatrix, b: &CMatrix, eps: f64) {
    let d = (a - b).max_abs();
    assert!(d <= eps, "{d:e}\n{a:?}\n{b:?}");
}

fn q11() -> CMatrix {
    CMatrix::real(&[[1.0, 1.0], [0.0, 0.0]])
}

#[test]
fn analyze_running_example() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(dir.path(), "q.json", &q11());
    let out = qpp(&["analyze", &q, "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["verdict"], "pass");
    near(
        &output_matrix(&r, "matched_projection"),
        &CMatrix::real(&[[H, X], [X, L]]),
        1e-9,
    );
    near(
        &output_matrix(&r, "supplementary_projection"),
        &CMatrix::real(&[[H, -X], [-X, L]]),
        1e-9,
    );
    assert_eq!(r["values"]["is_projection"], false);
}

#[test]
fn analyze_projection_skips_norms() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(dir.path(), "p.json", &CMatrix::diag_real(&[1.0, 0.0, 1.0]));
    let r = report(&qpp(&["analyze", &q, "--json"]));
    assert_eq!(r["values"]["is_projection"], true);
    assert!(r["values"].get("shared_norm").is_none());
    assert!(!r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["name"] == "shared_norm_1"));
}

#[test]
fn analyze_non_idempotent_fails_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(
        dir.path(),
        "q.json",
        &CMatrix::real(&[[1.0, 1.0], [0.0, 1.0]]),
    );
    let out = qpp(&["analyze", &q, "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let failing: Vec<_> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .collect();
    assert_eq!(failing[0]["name"], "NotIdempotent");
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"rows\": 2}").unwrap();
    assert_eq!(
        qpp(&["analyze", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(
        qpp(&["analyze", "/nonexistent.json"]).status.code(),
        Some(2)
    );
    assert_eq!(qpp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qpp(&["--help"]).status.code(), Some(0));
}

#[test]
fn decompose_modes() {
    let dir = tempfile::tempdir().unwrap();
    let tol = qpp_core::Tolerances::default();
    let m = qpp_core::idempotent::matched_projection(&q11(), &tol).unwrap();
    let pf = write(dir.path(), "m.json", &m);
    let qf = write(dir.path(), "q.json", &q11());

    let r = report(&qpp(&["decompose", "--mode", "2x2", &pf, &qf, "--json"]));
    assert_eq!(r["verdict"], "pass");
    let a = output_matrix(&r, "a");
    assert!((a[(0, 0)].re - (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-9);

    let p = CMatrix::diag_real(&[1.0, 0.0, 0.0]);
    let p2 = CMatrix::diag_real(&[1.0, 1.0, 0.0]);
    let pf = write(dir.path(), "p.json", &p);
    let qf2 = write(dir.path(), "p2.json", &p2);
    let r = report(&qpp(&["decompose", "--mode", "6x6", &pf, &qf2, "--json"]));
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["values"]["dims"][4], 0);
    assert_eq!(r["values"]["dims"][5], 0);

    let r = report(&qpp(&["decompose", "--mode", "matched4", &qf, "--json"]));
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["values"]["dims"], serde_json::json!([0, 0, 0, 0, 1, 1]));
    near(&output_matrix(&r, "s"), &CMatrix::real(&[[0.5]]), 1e-9);

    // P is 3×3, Q is 2×2.
    assert_eq!(
        qpp(&["decompose", "--mode", "2x2", &pf, &qf]).status.code(),
        Some(2)
    );
    assert_eq!(
        qpp(&["decompose", "--mode", "2x2", &qf]).status.code(),
        Some(2)
    );

    let out = qpp(&[
        "decompose",
        "--mode",
        "2x2",
        &write(dir.path(), "d.json", &CMatrix::diag_real(&[1.0, 0.0])),
        &qf,
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("NotQuasiPair"));
}

#[test]
fn reconstruct_examples() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", &CMatrix::diag_real(&[1.0, 0.0]));
    let r = report(&qpp(&["reconstruct", &p, &p, "--json"]));
    near(
        &output_matrix(&r, "q"),
        &CMatrix::diag_real(&[1.0, 0.0]),
        1e-12,
    );

    let m = write(dir.path(), "m.json", &CMatrix::real(&[[H, X], [X, L]]));
    let s = write(dir.path(), "s.json", &CMatrix::real(&[[H, -X], [-X, L]]));
    let out = qpp(&["reconstruct", &m, &s, "--json"]);
    assert_eq!(out.status.code(), Some(0));
    near(&output_matrix(&report(&out), "q"), &q11(), 1e-9);

    let c = write(dir.path(), "c.json", &CMatrix::diag_real(&[0.0, 1.0]));
    let out = qpp(&["reconstruct", &p, &c, "--json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("IllConditioned"));
}

#[test]
fn quadratic_examples() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.json", &CMatrix::diag_real(&[3.0, 5.0]));
    let r = report(&qpp(&["quadratic", &t, "--a", "3", "--b", "5", "--json"]));
    assert_eq!(r["values"]["dims"], serde_json::json!([1, 1, 0]));

    let t = write(
        dir.path(),
        "t2.json",
        &CMatrix::real(&[[0.0, 1.0], [0.0, 1.0]]),
    );
    let r = report(&qpp(&[
        "quadratic",
        &t,
        "--a",
        "0,0",
        "--b",
        "1,0",
        "--json",
    ]));
    assert_eq!(r["verdict"], "pass");
    near(
        &output_matrix(&r, "b_block"),
        &CMatrix::real(&[[1.0]]),
        1e-9,
    );

    let t = write(
        dir.path(),
        "t3.json",
        &CMatrix::real(&[[2.0, 3.0], [0.0, 2.0]]),
    );
    let r = report(&qpp(&["quadratic", &t, "--json"]));
    assert_eq!(r["values"]["roots_detected"], true);
    assert_eq!(r["values"]["a"], serde_json::json!([2.0, 0.0]));
    near(
        &output_matrix(&r, "b_block"),
        &CMatrix::real(&[[3.0]]),
        1e-9,
    );

    let t = write(dir.path(), "t4.json", &CMatrix::diag_real(&[1.0, 2.0, 3.0]));
    assert_eq!(qpp(&["quadratic", &t]).status.code(), Some(1));
}

#[test]
fn verify_is_deterministic() {
    let args = [
        "verify", "--suite", "all", "--seed", "3", "--trials", "4", "--dims", "2..5", "--json",
    ];
    let a = qpp(&args);
    let b = qpp(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(qpp(&["verify", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(qpp(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn tolerance_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(dir.path(), "q.json", &q11());
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_qpp"));
        c.args(["analyze", &q, "--json"]);
        c.env_remove("QPP_EQ_TOL");
        if let Some(v) = env {
            c.env("QPP_EQ_TOL", v);
        }
        if let Some(v) = flag {
            c.args(["--eq-tol", v]);
        }
        let r = report(&c.output().unwrap());
        r["tolerances"]["eq_tol"].as_f64().unwrap()
    };
    assert_eq!(run(None, None), 1e-9);
    assert_eq!(run(Some("1e-7"), None), 1e-7);
    assert_eq!(run(Some("1e-7"), Some("1e-6")), 1e-6);
    assert_eq!(
        qpp(&["--eq-tol", "-1", "analyze", &q]).status.code(),
        Some(2)
    );
}

#[test]
fn emit_dir_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(dir.path(), "q.json", &q11());
    let out_dir = dir.path().join("out");
    let out = qpp(&["analyze", &q, "--emit-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(out_dir.join("matched_projection.json")).unwrap();
    let m = MatrixFile::parse(&text).unwrap();
    assert_eq!(m.to_json(), text);
    assert!((m.to_matrix().unwrap()[(0, 1)] - C64::new(X, 0.0)).norm() < 1e-12);
}
