use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn floatbody(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floatbody")).args(args).current_dir(dir).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn body_compute_distance_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(floatbody(&["body", "--shape", "simplex", "--dim", "2", "--out", "s.json"], d).status.code(), Some(0));
    let body = read_json(&d.join("s.json"));
    assert_eq!(body["dim"], 2);
    assert_eq!(body["vertices"].as_array().unwrap().len(), 3);

    let out = floatbody(
        &[
            "compute",
            "--body",
            "s.json",
            "--delta",
            "0.01",
            "--directions",
            "64",
            "--mode",
            "exact",
            "--out",
            "fb.json",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let fb = read_json(&d.join("fb.json"));
    let dirs = fb["directions"].as_array().unwrap();
    let e1 =
        dirs.iter().position(|u| (u[0].as_f64().unwrap() - 1.0).abs() < 1e-12).expect("e1 is in the direction set");
    assert!((fb["depths"][e1].as_f64().unwrap() - 0.9).abs() < 1e-9);

    let out = floatbody(&["distance", "--a", "s.json", "--b", "fb.json", "--out", "d.json"], d);
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&d.join("d.json"));
    let at = report["dLAtCentroid"].as_f64().unwrap();
    let opt = report["dLOptimized"].as_f64().unwrap();
    assert!(opt >= 1.0 && opt <= at + 1e-12);
    assert!((report["dBMUpper"].as_f64().unwrap() - opt * opt).abs() < 1e-9);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dLOptimized"));
}

#[test]
fn isotropic_writes_image_and_map() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    floatbody(&["body", "--shape", "cube", "--dim", "2", "--out", "c.json"], d);
    let out = floatbody(&["isotropic", "--body", "c.json", "--out", "iso.json"], d);
    assert_eq!(out.status.code(), Some(0));
    let form: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((form["LK"].as_f64().unwrap() - (1.0f64 / 12.0).sqrt()).abs() < 1e-10);
    assert_eq!(read_json(&d.join("iso.json"))["dim"], 2);
}

#[test]
fn verification_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a.csv", "b.csv"] {
        let out = floatbody(&["verify-thm2", "--dims", "2", "--deltas", "0.015625", "--csv", name], d);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("suite,body,dim,delta,quantity,lower,value,upper,pass,tolerance"));
    assert!(text.contains("simplex"));
}

#[test]
fn monte_carlo_compute_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    floatbody(&["body", "--shape", "cube", "--dim", "2", "--out", "c.json"], d);
    for name in ["m1.json", "m2.json"] {
        let args = [
            "compute",
            "--body",
            "c.json",
            "--delta",
            "0.1",
            "--directions",
            "16",
            "--mode",
            "mc",
            "--samples",
            "20000",
            "--seed",
            "5",
            "--out",
            name,
        ];
        assert_eq!(floatbody(&args, d).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(d.join("m1.json")).unwrap(), std::fs::read(d.join("m2.json")).unwrap());
}

#[test]
fn lemma_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = floatbody(&["verify-lemmas"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&out.stdout).contains(",false,"));
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(floatbody(&["body", "--shape", "dodecahedron", "--dim", "3"], d).status.code(), Some(2));
    assert_eq!(floatbody(&["compute", "--body", "missing.json", "--delta", "0.1"], d).status.code(), Some(2));
    std::fs::write(d.join("junk.json"), "{not json").unwrap();
    assert_eq!(floatbody(&["compute", "--body", "junk.json", "--delta", "0.1"], d).status.code(), Some(2));
    floatbody(&["body", "--shape", "cube", "--dim", "2", "--out", "c.json"], d);
    assert_eq!(floatbody(&["compute", "--body", "c.json", "--delta", "0.5"], d).status.code(), Some(2));
    assert_eq!(floatbody(&["verify-thm2", "--dims", "2", "--deltas", "0.1"], d).status.code(), Some(2));
    assert_eq!(floatbody(&["verify-thm1", "--deltas", "0.4"], d).status.code(), Some(2));
    assert_eq!(
        floatbody(&["compute", "--body", "c.json", "--delta", "0.1", "--mode", "guess"], d).status.code(),
        Some(2)
    );
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_floatbody"))
            .args(["verify-lemmas"])
            .env("FLOATBODY_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    assert_eq!(run("1").status.code(), Some(0));
    assert_eq!(run("zero").status.code(), Some(2));
}
