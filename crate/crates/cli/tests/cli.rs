//! End-to-end runs of the `bergman` binary: exit codes, output formats,
//! group selection and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bergman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bergman"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn selftest_subset_runs_only_that_group() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("jets.json");
    let o = bergman(&["selftest", "--groups", "jets", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["pass"], true);
    let recs = v["records"].as_array().unwrap();
    assert!(!recs.is_empty());
    assert!(recs.iter().all(|r| r["group"] == "jets"));
}

#[test]
fn zero_tolerance_fails_with_named_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("strict.json");
    let o = bergman(&[
        "selftest",
        "--groups",
        "jets,star",
        "--tol-scale",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v = read_json(&out);
    assert_eq!(v["pass"], false);
    let failed: Vec<&str> = v["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["pass"] == false)
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert!(failed.iter().any(|n| n.ends_with("/phi.order4")));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(dir.path(), "typo.toml", "[model]\nname = \"disc-mu-sq\"\n[kernel]\nalpha = [8.0]\n");
    assert_eq!(bergman(&["verify-kernel", "--config", &typo]).status.code(), Some(2));
    let dup = write(dir.path(), "dup.toml", "[model]\nname = \"disc-mu-sq\"\n[kernel]\nalphas = [8.0, 8.0]\n");
    assert_eq!(bergman(&["star-table", "--config", &dup]).status.code(), Some(2));
    assert_eq!(bergman(&["verify-kernel", "--config", "/nonexistent.toml"]).status.code(), Some(2));
    assert_eq!(bergman(&["selftest", "--groups", "nope"]).status.code(), Some(2));
    assert_eq!(bergman(&["star-table", "--model", "unknown-model"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    // a cutoff far inside the Gaussian bulk leaves most of the mass out
    let cfg = write(
        dir.path(),
        "cut.toml",
        "[model]\nname = \"segal-bargmann\"\n[kernel]\nalphas = [8.0, 16.0, 32.0, 64.0]\ncutoff_radius = 0.2\nmax_degree = 24\n",
    );
    let o = bergman(&["verify-kernel", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn star_table_is_deterministic_and_csv_is_tabular() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "star.toml",
        "seed = 11\n[model]\nname = \"disc-mu-sq\"\n[star]\npolynomials = 3\n[points]\ncount = 2\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = bergman(&["star-table", "--config", &cfg, "--format", "csv", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ta = std::fs::read_to_string(&a).unwrap();
    assert_eq!(ta, std::fs::read_to_string(&b).unwrap());
    let mut rows = csv::Reader::from_reader(ta.as_bytes());
    assert_eq!(
        rows.headers().unwrap().iter().collect::<Vec<_>>(),
        ["group", "name", "expected", "observed", "tolerance", "comparison", "pass"]
    );
    let names: Vec<String> = rows.records().map(|r| r.unwrap()[1].to_string()).collect();
    assert!(names.iter().any(|n| n == "disc-mu-sq/commutator.bt"));

    let j = dir.path().join("seeded.json");
    let o = bergman(&["star-table", "--config", &cfg, "--seed", "99", "--out", j.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_json(&j)["metadata"]["seed"], 99);
}

#[test]
fn verify_kernel_reports_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sb.toml",
        "[model]\nname = \"sb-mu-exp\"\nbeta = 0.25\n[kernel]\nalphas = [8.0, 16.0, 32.0, 64.0]\n[points]\nlist = [[0.3, 0.1]]\n",
    );
    let out = dir.path().join("vk.json");
    let o = bergman(&["verify-kernel", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    let runs = v["metadata"]["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    for r in runs {
        assert!(r["condition_estimate"].as_f64().unwrap() >= 1.0);
        assert!(r["tail_estimate"].as_f64().unwrap() <= 1e-12);
        assert!(r["degree"].as_u64().unwrap() >= 24);
    }
    let k1 = v["records"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["group"] == "k1")
        .unwrap();
    assert!((k1["observed"].as_f64().unwrap() + 0.25).abs() < 1e-6);
    // 17 significant digits in the raw text
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"tolerance\": 2.0000000000000000e-2"));
}
