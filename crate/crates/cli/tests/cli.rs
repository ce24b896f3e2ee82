use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tnpur::format::{parse_purification, parse_tensor, AnyTensor};
use tnpur::reduction::{build_reduction, ReductionMode, ZulcInstance};

const E01: &str = "[[[0,1,0],[0,0,0],[0,0,0]],[[0,0,0],[0,0,0],[0,0,0]],[[0,0,0],[0,0,0],[0,0,0]],\
                   [[0,0,0],[0,0,0],[0,0,0]],[[0,0,0],[0,0,0],[0,0,0]]]";
const IDENTITY: &str = "[[[1,0,0],[0,1,0],[0,0,1]],[[1,0,0],[0,1,0],[0,0,1]],[[1,0,0],[0,1,0],[0,0,1]],\
                        [[1,0,0],[0,1,0],[0,0,1]],[[1,0,0],[0,1,0],[0,0,1]]]";
const PRODUCT: &str = r#"{"mode":"float","d":2,"D":1,"matrices":[[[{"re":0.5}]],[[{"re":0.5}]]]}"#;

fn tnpur(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tnpur")).args(args).output().expect("binary runs")
}

fn json_run(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = tnpur(&full);
    let report = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    });
    (out.status.code().expect("exit code"), report)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn reduce_then_scan_reports_the_witness() {
    let dir = tempfile::tempdir().unwrap();
    let ys = write(dir.path(), "ys.json", E01);
    let a = dir.path().join("a.json");
    let (code, _) = json_run(&["reduce", "--input", s(&ys), "--mode", "rational", "--out", s(&a)]);
    assert_eq!(code, 0);
    let (code, report) = json_run(&["scan", "--tensor", s(&a), "--max-len", "4", "--exact", "--pad", "5"]);
    assert_eq!(code, 2);
    assert_eq!(report["outcome"], "negative-witness");
    let cert = &report["certificates"][0];
    assert_eq!(cert["letters"], serde_json::json!([1, 7]));
    assert_eq!(cert["word"], serde_json::json!([0, 6]));
    assert_eq!(cert["trace"], serde_json::json!({ "num": -1, "den": 1 }));
    assert_eq!(report["details"]["extends"]["negative"], true);
}

#[test]
fn written_reduction_tensor_reparses_identically() {
    let dir = tempfile::tempdir().unwrap();
    let ys = write(dir.path(), "ys.json", IDENTITY);
    let a = dir.path().join("a.json");
    assert_eq!(tnpur(&["reduce", "--input", s(&ys), "--out", s(&a)]).status.code(), Some(0));
    let back = parse_tensor(&fs::read_to_string(&a).unwrap()).unwrap();
    let z = ZulcInstance::parse(IDENTITY).unwrap();
    assert_eq!(back, build_reduction(&z, ReductionMode::Rational).tensor);
}

#[test]
fn powersum_recovers_quadratic_roots() {
    let (code, report) = json_run(&["powersum", "recover", "--sums", "3,5", "--n", "2"]);
    assert_eq!(code, 0);
    assert_eq!(report["details"]["display"], "{1, 2}");
    let mut roots: Vec<f64> = report["details"]["multiset"]
        .as_array()
        .unwrap()
        .iter()
        .map(|z| {
            assert!(z[1].as_f64().unwrap().abs() < 1e-12);
            z[0].as_f64().unwrap()
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    assert!((roots[0] - 1.0).abs() < 1e-9 && (roots[1] - 2.0).abs() < 1e-9, "{roots:?}");
}

#[test]
fn exact_powersum_reports_the_polynomial() {
    let (code, report) = json_run(&["powersum", "recover", "--sums", "3,5", "--n", "2", "--exact"]);
    assert_eq!(code, 0);
    // X^2 - 3X + 2
    let poly = report["details"]["polynomial"].as_array().unwrap();
    let re: Vec<&Value> = poly.iter().map(|c| &c["re"]).collect();
    assert_eq!(re, [&serde_json::json!([1, 1]), &serde_json::json!([-3, 1]), &serde_json::json!([2, 1])]);
}

#[test]
fn mismatched_matrix_count_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"mode":"float","d":3,"D":1,"matrices":[[[{"re":1}]],[[{"re":2}]]]}"#,
    );
    let out = tnpur(&["scan", "--tensor", s(&bad), "--max-len", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("schema error") && err.contains("matrices"), "{err}");
}

#[test]
fn malformed_json_names_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"mode\":\"float\",\n\"d\":\"two\",\"D\":1,\"matrices\":[]}");
    let out = tnpur(&["scan", "--tensor", s(&bad), "--max-len", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("`d`"), "{err}");
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(tnpur(&["scan", "--max-len", "3"]).status.code(), Some(1));
    assert_eq!(tnpur(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(tnpur(&["--help"]).status.code(), Some(0));
}

#[test]
fn identities_pass_for_the_identity_instance() {
    let dir = tempfile::tempdir().unwrap();
    let ys = write(dir.path(), "ys.json", IDENTITY);
    let (code, report) = json_run(&["verify-identities", "--input", s(&ys), "--samples", "100"]);
    assert_eq!(code, 0);
    assert_eq!(report["outcome"], "clean-pass");
    assert_eq!(report["seed"], 42);
    let (code, report) = json_run(&["verify-identities", "--input", s(&ys), "--samples", "0"]);
    assert_eq!(code, 0);
    assert_eq!(report["details"]["samples_run"], 0);
}

#[test]
fn corrupted_tensor_is_caught_with_a_word() {
    let dir = tempfile::tempdir().unwrap();
    let ys = write(dir.path(), "ys.json", IDENTITY);
    let z = ZulcInstance::parse(IDENTITY).unwrap();
    let AnyTensor::Exact(t) = build_reduction(&z, ReductionMode::Rational).tensor else { unreachable!() };
    let mut ms = t.into_matrices();
    ms[2][(0, 0)] = ms[2][(0, 0)].clone() + tnpur::Exact::from(tnpur::scalar::exact_real(1, 1));
    let corrupted = tnpur::MpsTensor::new(ms).unwrap();
    let a = write(dir.path(), "a.json", &tnpur::format::write_tensor(&corrupted));
    let (code, report) = json_run(&["verify-identities", "--input", s(&ys), "--tensor", s(&a), "--samples", "200"]);
    assert_eq!(code, 2);
    assert_eq!(report["outcome"], "discrepancy");
    let cert = &report["certificates"][0];
    assert!(cert["word"].as_array().is_some_and(|w| !w.is_empty()));
    assert_ne!(cert["expected"], cert["found"]);
}

#[test]
fn purify_then_verify_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "p.json", PRODUCT);
    let b = dir.path().join("b.json");
    let (code, report) = json_run(&["purify", "--tensor", s(&t), "--bond", "1", "--tol", "1e-8", "--out", s(&b)]);
    assert_eq!(code, 0, "{report}");
    assert_eq!(report["outcome"], "found");
    let written = parse_purification(&fs::read_to_string(&b).unwrap()).unwrap().to_float();
    let cert = parse_purification(&report["certificates"][0]["purification"].to_string()).unwrap().to_float();
    for (x, y) in written.matrices().iter().zip(cert.matrices()) {
        assert!(x.max_abs_diff(y) <= 1e-15);
    }
    let (code, report) = json_run(&["verify", "--tensor", s(&t), "--purification", s(&b)]);
    assert_eq!(code, 0, "{report}");
}

#[test]
fn negative_target_is_not_purified() {
    let dir = tempfile::tempdir().unwrap();
    let ys = write(dir.path(), "ys.json", E01);
    let a = dir.path().join("a.json");
    assert_eq!(tnpur(&["reduce", "--input", s(&ys), "--out", s(&a)]).status.code(), Some(0));
    let (code, report) = json_run(&["purify", "--tensor", s(&a), "--bond", "1", "--lengths", "1..3", "--restarts", "8"]);
    assert_eq!(code, 2);
    assert_eq!(report["outcome"], "not-found-inconclusive");
    assert!(report["details"]["best_residual"].as_f64().unwrap() >= 1e-3);
}

#[test]
fn certificates_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let ys = write(dir.path(), "ys.json", E01);
    let a = dir.path().join("a.json");
    assert_eq!(tnpur(&["reduce", "--input", s(&ys), "--out", s(&a)]).status.code(), Some(0));
    let t = write(dir.path(), "p.json", PRODUCT);
    let runs: [Vec<&str>; 3] = [
        vec!["scan", "--tensor", s(&a), "--max-len", "4", "--exact"],
        vec!["verify-identities", "--input", s(&ys), "--samples", "300", "--seed", "7"],
        vec!["purify", "--tensor", s(&t), "--bond", "1", "--seed", "3"],
    ];
    for args in runs {
        let certs: Vec<String> = ["1", "4"]
            .iter()
            .map(|n| {
                let mut full = vec!["--threads", n];
                full.extend_from_slice(&args);
                let (_, report) = json_run(&full);
                serde_json::to_string(&(&report["certificates"], &report["outcome"])).unwrap()
            })
            .collect();
        assert_eq!(certs[0], certs[1], "{args:?}");
    }
}
