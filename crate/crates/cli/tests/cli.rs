use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn sil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sil"))
        .args(args)
        .env("SIL_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_dimension_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    std::fs::write(&spec, r#"{"schema": "sil/1", "kind": "free-particle"}"#).unwrap();
    let o = sil(&["transform", "--model", s(&spec)]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("missing field `n`"), "{err}");
}

#[test]
fn unknown_schema_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("v2.json");
    std::fs::write(&spec, r#"{"schema": "sil/2", "kind": "pendulum", "a": 1}"#).unwrap();
    assert_eq!(code(&sil(&["transform", "--model", s(&spec)])), 2);
}

#[test]
fn transform_reports_pass() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["quadratic.json", "physical_cos.json"] {
        let out = dir.path().join(format!("report-{name}"));
        let o = sil(&[
            "transform",
            "--model",
            s(&models().join(name)),
            "--out",
            s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let doc = json_file(&out);
        assert_eq!(doc["passed"], true);
        let r = &doc["identities"]["residuals"];
        for key in ["momentum_velocity", "position_gradient", "fiber_hessian"] {
            assert!(r[key].as_f64().unwrap() <= 1e-7, "{name} {key}: {}", r[key]);
        }
    }
}

#[test]
fn orbit_then_index_then_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let orbit = dir.path().join("orbit.json");
    let o = sil(&[
        "find-orbit",
        "--model",
        s(&models().join("pendulum.json")),
        "--config",
        s(&configs().join("pendulum_max.json")),
        "--out",
        s(&orbit),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json_file(&orbit)["converged"], true);

    let idx = dir.path().join("index.json");
    let o = sil(&[
        "index",
        "--model",
        s(&models().join("pendulum.json")),
        "--orbit",
        s(&orbit),
        "--out",
        s(&idx),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json_file(&idx);
    assert_eq!(doc["agree"], true);
    assert_eq!(doc["hessian"]["morse_index"], doc["maslov"]["index"]);

    let csv = dir.path().join("seq.csv");
    let o = sil(&[
        "iterate",
        "--model",
        s(&models().join("pendulum.json")),
        "--orbit",
        s(&orbit),
        "--kmax",
        "4",
        "--nf",
        "16",
        "--format",
        "csv",
        "--out",
        s(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("k,m_minus,m_zero,i,nu"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn route_offset_injection_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let orbit = dir.path().join("orbit.json");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"schema": "sil/1", "tau": 1.3, "q0": [0.0], "inject_route_offset": 1}"#,
    )
    .unwrap();
    let model = models().join("pendulum.json");
    let o = sil(&["find-orbit", "--model", s(&model), "--config", s(&cfg), "--out", s(&orbit)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let idx = dir.path().join("index.json");
    let o = sil(&[
        "index", "--model", s(&model), "--orbit", s(&orbit), "--config", s(&cfg), "--out", s(&idx),
    ]);
    assert_eq!(code(&o), 4);
    assert_eq!(json_file(&idx)["agree"], false);
}

#[test]
fn non_convergence_exits_3_and_keeps_the_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let orbit = dir.path().join("orbit.json");
    let o = sil(&[
        "find-orbit",
        "--model",
        s(&models().join("magnetic.json")),
        "--config",
        s(&configs().join("straight2.json")),
        "--tol",
        "1e-300",
        "--nf",
        "8",
        "--out",
        s(&orbit),
    ]);
    assert_eq!(code(&o), 3);
    let doc = json_file(&orbit);
    assert_eq!(doc["converged"], false);
    assert!(doc["residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn verify_single_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.json");
    let o = sil(&["verify", "sobolev", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json_file(&out);
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["checks"].as_array().unwrap().len(), 1);
    assert_eq!(code(&sil(&["verify", "everything"])), 2);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let model = models().join("magnetic.json");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = sil(&["transform", "--model", s(&model), "--seed", "7", "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}
