use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use coarsekit::kernels::KernelMatrix;
use coarsekit::report::Certificate;

fn coarsekit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coarsekit")).current_dir(dir).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not a report ({e}): {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn witness_validate_accepts_a_genuine_witness() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "k.json", r#"{"labels":["a","b"],"matrix":[[0,-1],[-1,0]]}"#);
    let out = coarsekit(dir.path(), &["witness-validate", "--kernel", "k.json", "--vector", "1,-1", "--no-meta"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["verdicts"][0]["details"]["valid"], true);
    assert_eq!(r["verdicts"][0]["details"]["quadratic_form"], 2.0);

    let out = coarsekit(dir.path(), &["witness-validate", "--kernel", "k.json", "--vector", "1,1", "--no-meta"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "line.json", r#"{"labels":["0","1","2"],"matrix":[[0,1,2],[1,0,1],[2,1,0]]}"#);
    write(d, "off.json", r#"{"labels":["a","b"],"matrix":[[0,1],[1,0]]}"#);
    write(d, "broken.json", r#"{"labels":["a"], "matrix": [[0]"#);
    write(d, "asym.json", r#"{"labels":["a","b"],"matrix":[[0,1],[2,0]]}"#);

    assert_eq!(coarsekit(d, &["kernel", "check", "--mode", "nd", "line.json"]).status.code(), Some(0));
    assert_eq!(coarsekit(d, &["kernel", "check", "--mode", "pd", "off.json"]).status.code(), Some(2));
    assert_eq!(coarsekit(d, &["kernel", "check", "--mode", "pd", "broken.json"]).status.code(), Some(1));
    assert_eq!(coarsekit(d, &["kernel", "check", "--mode", "pd", "asym.json"]).status.code(), Some(1));
    assert_eq!(coarsekit(d, &["kernel", "check", "--mode", "pd", "missing.json"]).status.code(), Some(1));
    assert_eq!(coarsekit(d, &["kernel", "check", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(coarsekit(d, &["--help"]).status.code(), Some(0));

    let out = coarsekit(d, &["pipeline", "c2u", "--dim", "1", "--q", "2", "--radius", "4", "--map", "constant"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["result"]["halted_at"], "strong_uniform_assembly");
}

#[test]
fn certificates_in_reports_are_sound() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "neg.json", r#"{"labels":["a","b","c"],"matrix":[[0,-1,-4],[-1,0,-1],[-4,-1,0]]}"#);
    for mode in ["nd", "pd"] {
        let out = coarsekit(d, &["kernel", "check", "--mode", mode, "neg.json", "--no-meta"]);
        assert_eq!(out.status.code(), Some(2));
        let certs: Vec<Certificate> = serde_json::from_value(report(&out)["certificates"].clone()).unwrap();
        assert_eq!(certs.len(), 1);
        for cert in &certs {
            assert!(cert.validate().unwrap().valid);
        }
    }

    // the embed command refuses the kernel but still hands over the witness
    let out = coarsekit(d, &["embed", "--from", "nd", "--basepoint", "a", "neg.json", "--no-meta"]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    let cert: Certificate = serde_json::from_value(r["certificates"][0].clone()).unwrap();
    let k: KernelMatrix = serde_json::from_str(&std::fs::read_to_string(d.join("neg.json")).unwrap()).unwrap();
    assert_eq!(cert.kernel, k);
    assert!(cert.validate().unwrap().valid);
}

#[test]
fn no_meta_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let grid = ["space", "grid", "--dim", "2", "--q", "0.5", "--radius", "2", "--out", "g.json", "--no-meta"];
    assert_eq!(coarsekit(d, &grid).status.code(), Some(0));
    let dist = ["kernel", "distance", "g.json", "--out", "n.json", "--no-meta"];
    assert_eq!(coarsekit(d, &dist).status.code(), Some(0));

    let embed = ["embed", "--from", "nd", "--basepoint", "0,0", "n.json", "--no-meta"];
    let first = coarsekit(d, &embed);
    let second = coarsekit(d, &["--threads", "1", "embed", "--from", "nd", "--basepoint", "0,0", "n.json", "--no-meta"]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert!(report(&first).get("wall_time").is_none());

    let timed = coarsekit(d, &["embed", "--from", "nd", "--basepoint", "0,0", "n.json"]);
    assert!(report(&timed)["wall_time"].is_number());
}

#[test]
fn embedding_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    coarsekit(d, &["space", "grid", "--dim", "1", "--q", "1", "--radius", "4", "--out", "g.json"]);
    coarsekit(d, &["kernel", "distance", "g.json", "--out", "n.json"]);
    let out = coarsekit(d, &["embed", "--from", "nd", "--basepoint", "0", "n.json", "--out", "e.json", "--csv", "e.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(d.join("e.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);

    let out = coarsekit(d, &["moduli", "--sample", "g.json", "--image", "e.json", "--thresholds", "1,4"]);
    assert_eq!(out.status.code(), Some(0));
    let profile = &report(&out)["result"];
    // the image of |x − y| is √|x − y|
    assert!((profile["phi"][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((profile["omega"][1].as_f64().unwrap() - 2.0).abs() < 1e-9);
}
