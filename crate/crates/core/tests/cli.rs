use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dxtree::{EvalReport, ModelDocument};

fn dxtree(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dxtree")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dxtree(dir, args);
    assert!(out.status.success(), "{:?}: {}", args, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    dxtree(dir, args).status.code().unwrap()
}

fn cohort(dir: &Path) {
    ok(dir, &["synth", "--out", "raw.csv", "--schema-out", "c.schema", "--seed", "7"]);
    ok(dir, &["impute", "--data", "raw.csv", "--schema", "c.schema", "--out", "c.csv", "--means", "means.csv"]);
}

#[test]
fn synth_and_impute_write_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    cohort(dir);
    let raw = fs::read_to_string(dir.join("raw.csv")).unwrap();
    assert_eq!(raw.lines().count(), 66);
    assert!(raw.contains('?'));
    let imputed = fs::read_to_string(dir.join("c.csv")).unwrap();
    let header = imputed.lines().next().unwrap();
    let ignored: Vec<usize> = header.split(',').enumerate().filter(|(_, h)| *h == "IgM" || *h == "IgG").map(|(i, _)| i).collect();
    for line in imputed.lines().skip(1) {
        for (i, cell) in line.split(',').enumerate() {
            assert!(cell != "?" || ignored.contains(&i), "numeric feature left missing: {}", line);
        }
    }
    let means = fs::read_to_string(dir.join("means.csv")).unwrap();
    assert!(means.starts_with("attribute,imputed,mean\n"));
}

#[test]
fn select_writes_tables_and_restricted_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    cohort(dir);
    let text = ok(dir, &[
        "select", "--data", "c.csv", "--schema", "c.schema", "--alpha", "0.05", "--force-include", "Pulse,WBC",
        "--json", "sel.json", "--schema-out", "sel.schema",
    ]);
    assert!(text.contains("selected:"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("sel.json")).unwrap()).unwrap();
    let selected: Vec<&str> = json["selection"]["selected"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(selected.contains(&"Pulse") && selected.contains(&"WBC"));
    let schema = dxtree::Schema::parse_sidecar(&fs::read_to_string(dir.join("sel.schema")).unwrap()).unwrap();
    let features: Vec<String> = schema.feature_indices().iter().map(|&i| schema.attribute(i).name.clone()).collect();
    assert_eq!(features.iter().map(String::as_str).collect::<Vec<_>>(), selected);
    assert_eq!(code(dir, &["select", "--data", "c.csv", "--schema", "c.schema", "--force-include", "Nope"]), 2);
    assert_eq!(code(dir, &["select", "--data", "c.csv", "--schema", "c.schema", "--alpha", "0"]), 1);
}

#[test]
fn train_predict_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    cohort(dir);
    for algo in ["adtree", "c45"] {
        let model = format!("{}.json", algo);
        let rendered = ok(dir, &[
            "train", "--algo", algo, "--data", "c.csv", "--schema", "c.schema", "--out", &model, "--discretize",
            "Pulse:100:L:H",
        ]);
        assert!(!rendered.is_empty());
        let doc = ModelDocument::from_json(&fs::read_to_string(dir.join(&model)).unwrap()).unwrap();
        assert_eq!(doc.preprocessing.len(), 1);
        let out = ok(dir, &["predict", "--model", &model, "--data", "c.csv"]);
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("row,label,score"));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 65);
        for (i, row) in rows.iter().enumerate() {
            let parts: Vec<&str> = row.split(',').collect();
            assert_eq!(parts[0], (i + 1).to_string());
            assert!(parts[1] == "YES" || parts[1] == "NO");
            assert!(parts[2].parse::<f64>().unwrap().is_finite());
        }
    }
}

#[test]
fn predict_accepts_rows_without_target() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    cohort(dir);
    ok(dir, &["train", "--data", "c.csv", "--schema", "c.schema", "--out", "m.json"]);
    let full = fs::read_to_string(dir.join("c.csv")).unwrap();
    let stripped: String = full.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n").collect();
    fs::write(dir.join("new.csv"), stripped).unwrap();
    ok(dir, &["predict", "--model", "m.json", "--data", "new.csv", "--out", "pred.csv"]);
    let with = ok(dir, &["predict", "--model", "m.json", "--data", "c.csv"]);
    assert_eq!(fs::read_to_string(dir.join("pred.csv")).unwrap(), with);
}

#[test]
fn evaluate_and_roc_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    cohort(dir);
    let text = ok(dir, &[
        "evaluate", "--algo", "c45", "--data", "c.csv", "--schema", "c.schema", "--report", "r.json", "--roc", "roc.csv",
        "--svg", "roc.svg",
    ]);
    assert!(text.contains("Weighted"));
    let report = EvalReport::from_json(&fs::read_to_string(dir.join("r.json")).unwrap()).unwrap();
    assert!(report.is_consistent());
    let roc = fs::read_to_string(dir.join("roc.csv")).unwrap();
    assert!(roc.starts_with("threshold,fp_rate,tp_rate\ninf,0,0\n"));
    assert!(roc.trim_end().ends_with(",1,1"));
    ok(dir, &["roc", "--report", "r.json", "--svg", "again.svg", "--csv", "again.csv"]);
    assert_eq!(fs::read(dir.join("again.svg")).unwrap(), fs::read(dir.join("roc.svg")).unwrap());
    assert_eq!(fs::read_to_string(dir.join("again.csv")).unwrap(), roc);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    cohort(dir);
    assert_eq!(code(dir, &["--help"]), 0);
    assert_eq!(code(dir, &[]), 1);
    assert_eq!(code(dir, &["evaluate", "--data", "c.csv"]), 1);
    assert_eq!(code(dir, &["train", "--algo", "svm", "--data", "c.csv", "--schema", "c.schema", "--out", "m"]), 1);
    assert_eq!(code(dir, &["evaluate", "--data", "c.csv", "--schema", "c.schema", "--report", "r", "--k", "1"]), 1);
    assert_eq!(code(dir, &["train", "--data", "c.csv", "--schema", "c.schema", "--out", "m", "--epsilon", "0"]), 1);
    assert_eq!(code(dir, &["train", "--data", "c.csv", "--schema", "c.schema", "--out", "m", "--discretize", "Pulse"]), 1);
    assert_eq!(code(dir, &["train", "--algo", "c45", "--data", "c.csv", "--schema", "c.schema", "--out", "m", "--cf", "2"]), 1);
    // missing cells, unknown files, bad rows
    assert_eq!(code(dir, &["evaluate", "--data", "raw.csv", "--schema", "c.schema", "--report", "r"]), 2);
    assert_eq!(code(dir, &["train", "--data", "none.csv", "--schema", "c.schema", "--out", "m"]), 2);
    let mut text = fs::read_to_string(dir.join("c.csv")).unwrap();
    text = text.replacen(",YES\n", ",MAYBE\n", 1);
    fs::write(dir.join("bad.csv"), text).unwrap();
    let out = dxtree(dir, &["train", "--data", "bad.csv", "--schema", "c.schema", "--out", "m"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("MAYBE"));
    fs::write(dir.join("junk.json"), "{\"format\":\"something-else\",\"version\":1}").unwrap();
    assert_eq!(code(dir, &["predict", "--model", "junk.json", "--data", "c.csv"]), 2);
}

#[test]
fn in_process_entry_point_matches_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s.csv");
    let schema = tmp.path().join("s.schema");
    let args = ["dxtree", "synth", "--preset", "separable", "--n", "20", "--n-pos", "8", "--out", out.to_str().unwrap(), "--schema-out", schema.to_str().unwrap()];
    assert_eq!(dxtree::cli::run(args), 0);
    let first = fs::read_to_string(&out).unwrap();
    ok(tmp.path(), &args[1..]);
    assert_eq!(fs::read_to_string(&out).unwrap(), first);
    assert_eq!(first.lines().filter(|l| l.ends_with(",YES")).count(), 8);
}
