use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn vircocycle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vircocycle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn kac_lists_the_ising_weights() {
    let out = vircocycle(&["kac", "--p", "3"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["distinct_h"], serde_json::json!(["0", "1/16", "1/2"]));
    assert!(v["table"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["c"] == "1/2"));
}

#[test]
fn kac_classifies_a_point() {
    let v = json_of(&vircocycle(&["kac", "--h", "0.5", "--c", "0.5"]));
    assert_eq!(v["class"]["class"], "discrete");
    assert_eq!(v["class"]["p"], 3);
}

#[test]
fn small_relation_check_passes() {
    let out = vircocycle(&["virasoro-check", "--cutoff", "6", "--bound", "2"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json_of(&out)["passed"], true);
}

#[test]
fn generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    for (p, seed) in [(&a, "3"), (&b, "3"), (&c, "4")] {
        let out = vircocycle(&[
            "gen",
            "--seed",
            seed,
            "--count",
            "2",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for f in [
        "corpus.json",
        "diffeo_001.json",
        "r_minus_000.json",
        "p_plus_001.json",
        "point_000.json",
    ] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
    assert_ne!(
        read(&a.join("diffeo_000.json")),
        read(&c.join("diffeo_000.json"))
    );
}

#[test]
fn generated_files_feed_weld_and_cocycle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(vircocycle(&["gen", "--count", "1", "--out", out])
        .status
        .success());
    let diffeo = dir.path().join("diffeo_000.json");
    let w = vircocycle(&["weld", "--n", "32", "--diffeo", diffeo.to_str().unwrap()]);
    assert!(w.status.success(), "{}", String::from_utf8_lossy(&w.stderr));
    assert_eq!(json_of(&w)["passed"], true);

    let (r, p) = (
        dir.path().join("r_minus_000.json"),
        dir.path().join("p_plus_000.json"),
    );
    let report = dir.path().join("cocycle.json");
    let c = vircocycle(&[
        "cocycle",
        "--n",
        "24",
        "--r-minus",
        r.to_str().unwrap(),
        "--p-plus",
        p.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    let v: Value = serde_json::from_str(&read(&report)).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["failures"].as_array().unwrap().is_empty());
    // Complex numbers are [re, im] pairs.
    assert_eq!(v["theorem"]["lambda_integral"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_reports_selected_criteria() {
    let out = vircocycle(&["verify", "--suite", "discrete,grunsky", "--count", "0"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let ids: Vec<u64> = v["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["criterion"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, [2, 5]);
    assert_eq!(v["passed"], true);
}

#[test]
fn empty_corpus_gives_empty_report() {
    let v = json_of(&vircocycle(&[
        "verify", "--suite", "cocycle", "--count", "0",
    ]));
    assert!(v["criteria"].as_array().unwrap().is_empty());
}

#[test]
fn campaign_file_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("campaign.json");
    std::fs::write(&cfg, r#"{ "seed": 5, "unknown": 1 }"#).unwrap();
    let out = vircocycle(&["kac", "--p", "3", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown"));
}

#[test]
fn gen_rejects_bounds_past_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    let out = vircocycle(&[
        "gen",
        "--bound",
        "0.5",
        "--max-displacement",
        "0.3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
