use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tagcal::{load_dataset, EvaluationReport, RecalibratorModel};

fn tagcal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tagcal"))
        .args(args)
        .env_remove("TAGCAL_OUT_DIR")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(args: &[&str]) -> Output {
    let o = tagcal(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a synthetic split into `dir/name` and returns its directory.
fn synth(dir: &Path, name: &str, seed: u64, instances: usize) -> PathBuf {
    let out = dir.join(name);
    ok(&[
        "synth",
        "--tags",
        "40",
        "--instances",
        &instances.to_string(),
        "--distortion",
        "power:2@0",
        "--seed",
        &seed.to_string(),
        "--out-dir",
        s(&out),
    ]);
    out
}

fn fit_args<'a>(dev: &'a Path, out: &'a Path, method: &'a str) -> Vec<String> {
    [
        "fit",
        "--train-counts",
        s(&dev.join("counts.tsv")),
        "--dev-scores",
        s(&dev.join("scores.tsv")),
        "--dev-gold",
        s(&dev.join("gold.tsv")),
        "--method",
        method,
        "--out",
        s(out),
    ]
    .iter()
    .map(|a| a.to_string())
    .collect()
}

fn run_strings(args: &[String]) -> Output {
    tagcal(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn fit_writes_a_model_that_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let dev = synth(dir.path(), "dev", 1, 4_000);
    let model_path = dir.path().join("model.json");
    let o = run_strings(&fit_args(&dev, &model_path, "scaling"));
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&model_path).unwrap();
    let model = RecalibratorModel::from_json(&text).unwrap();
    assert_eq!(model.parameters().len(), 5);
    assert_eq!(model.bins(), Some(10));
    assert_eq!(model.to_json().unwrap() + "\n", text);
}

#[test]
fn zero_groups_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let dev = synth(dir.path(), "dev", 1, 500);
    let mut args = fit_args(&dev, &dir.path().join("m.json"), "hist");
    args.extend(["--groups".to_string(), "0".to_string()]);
    assert_eq!(run_strings(&args).status.code(), Some(2));
    assert_eq!(tagcal(&["fit"]).status.code(), Some(2));
    assert_eq!(tagcal(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn isotonic_warns_about_explicit_bins_only() {
    let dir = tempfile::tempdir().unwrap();
    let dev = synth(dir.path(), "dev", 1, 3_000);
    let out = dir.path().join("m.json");
    let plain = run_strings(&fit_args(&dev, &out, "isotonic"));
    assert!(plain.status.success());
    assert!(!stderr(&plain).contains("--bins"));
    let mut args = fit_args(&dev, &out, "isotonic");
    args.extend(["--bins".to_string(), "20".to_string()]);
    let flagged = run_strings(&args);
    assert!(flagged.status.success());
    assert!(
        stderr(&flagged).contains("warning: --bins has no effect"),
        "{}",
        stderr(&flagged)
    );
    assert_eq!(
        RecalibratorModel::from_json(&fs::read_to_string(&out).unwrap())
            .unwrap()
            .bins(),
        None
    );
}

#[test]
fn fit_reports_data_errors_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let dev = synth(dir.path(), "dev", 1, 300);
    let mut args = fit_args(&dev, &dir.path().join("m.json"), "hist");
    args.extend(["--bins".to_string(), "1000".to_string()]);
    let o = run_strings(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: "), "{}", stderr(&o));

    let missing = fit_args(
        Path::new("/nonexistent"),
        &dir.path().join("m.json"),
        "hist",
    );
    let o = run_strings(&missing);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent"));
}

#[test]
fn apply_with_one_bin_outputs_the_dev_positive_rate() {
    let dir = tempfile::tempdir().unwrap();
    let dev = synth(dir.path(), "dev", 1, 2_000);
    let test = synth(dir.path(), "test", 2, 1_000);
    let model = dir.path().join("m.json");
    let mut args = fit_args(&dev, &model, "hist");
    args.extend(["--groups", "1", "--bins", "1", "--threshold", "0.2"].map(String::from));
    assert!(run_strings(&args).status.success());

    let dev_set = load_dataset(dev.join("scores.tsv"), dev.join("gold.tsv"), 0.2).unwrap();
    let positives = dev_set.records().iter().filter(|r| r.label).count();
    let rate = positives as f64 / dev_set.len() as f64;

    let out = dir.path().join("calibrated.tsv");
    ok(&[
        "apply",
        "--model",
        s(&model),
        "--scores",
        s(&test.join("scores.tsv")),
        "--gold",
        s(&test.join("gold.tsv")),
        "--out",
        s(&out),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("instance_id\ttag\traw\tcalibrated"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();

    let expected = load_dataset(test.join("scores.tsv"), test.join("gold.tsv"), 0.2).unwrap();
    assert_eq!(rows.len(), expected.len());
    for (row, record) in rows.iter().zip(expected.records()) {
        assert_eq!(row[0], record.instance_id);
        assert_eq!(row[1], record.tag);
        let raw: f64 = row[2].parse().unwrap();
        assert!(raw >= 0.2);
        assert_eq!(raw, record.confidence);
        assert_eq!(row[3].parse::<f64>().unwrap(), rate);
    }
}

#[test]
fn apply_rejects_scores_without_gold() {
    let dir = tempfile::tempdir().unwrap();
    let dev = synth(dir.path(), "dev", 1, 1_000);
    let model = dir.path().join("m.json");
    let mut args = fit_args(&dev, &model, "hist");
    args.extend(["--groups", "1"].map(String::from));
    assert!(run_strings(&args).status.success());
    let gold = dir.path().join("gold.tsv");
    fs::write(&gold, "instance_id\tgold_tag\n").unwrap();
    let o = tagcal(&[
        "apply",
        "--model",
        s(&model),
        "--scores",
        s(&dev.join("scores.tsv")),
        "--gold",
        s(&gold),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gold"), "{}", stderr(&o));
}

#[test]
fn evaluate_raw_and_recalibrated() {
    let dir = tempfile::tempdir().unwrap();
    let dev = synth(dir.path(), "dev", 1, 6_000);
    let test = synth(dir.path(), "test", 2, 6_000);
    let model = dir.path().join("m.json");
    let mut args = fit_args(&dev, &model, "hist");
    args.extend(["--groups", "1"].map(String::from));
    assert!(run_strings(&args).status.success());

    let (scores, gold, counts) = (
        test.join("scores.tsv"),
        test.join("gold.tsv"),
        dev.join("counts.tsv"),
    );
    let base = [
        "evaluate",
        "--scores",
        s(&scores),
        "--gold",
        s(&gold),
        "--train-counts",
        s(&counts),
        "--format",
        "json",
    ];
    let raw = ok(&base);
    let raw = EvaluationReport::from_json(&String::from_utf8(raw.stdout).unwrap()).unwrap();
    assert_eq!(raw.rows.len(), 1);

    let report = dir.path().join("report.json");
    let mut with_model = base.to_vec();
    with_model.extend(["--model", s(&model), "--report", s(&report)]);
    let o = ok(&with_model);
    // 6,000 instances spread over five groups leave bins well under 200
    assert!(
        stderr(&o).contains("fewer than the recommended 200"),
        "{}",
        stderr(&o)
    );
    let calibrated = EvaluationReport::from_json(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(calibrated.rows[0], raw.rows[0]);
    let row = &calibrated.rows[1];
    assert_eq!(row.groups, Some(1));
    assert!(row.smce < raw.rows[0].smce);

    let md = ok(&base[..base.len() - 2]);
    assert!(String::from_utf8(md.stdout).unwrap().contains("| None |"));
}

#[test]
fn evaluate_fails_when_a_group_is_too_small() {
    let dir = tempfile::tempdir().unwrap();
    let test = synth(dir.path(), "test", 2, 400);
    let o = tagcal(&[
        "evaluate",
        "--scores",
        s(&test.join("scores.tsv")),
        "--gold",
        s(&test.join("gold.tsv")),
        "--train-counts",
        s(&test.join("counts.tsv")),
        "--bins",
        "200",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bin"), "{}", stderr(&o));
}

#[test]
fn synth_is_seeded_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), "a", 9, 2_000);
    let b = synth(dir.path(), "b", 9, 2_000);
    let c = synth(dir.path(), "c", 10, 2_000);
    for file in ["scores.tsv", "gold.tsv", "counts.tsv", "manifest.json"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    assert_ne!(
        fs::read(a.join("scores.tsv")).unwrap(),
        fs::read(c.join("scores.tsv")).unwrap()
    );
    let o = tagcal(&["synth", "--out-dir", s(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
    let bad = tagcal(&[
        "synth",
        "--seed",
        "1",
        "--distortion",
        "cubic",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn synth_output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tagcal"))
        .args(["synth", "--seed", "3", "--instances", "500"])
        .env("TAGCAL_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn run_writes_reports_and_models_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let dev = synth(dir.path(), "dev", 1, 4_000);
    let test = synth(dir.path(), "test", 2, 4_000);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("out{run}"));
        ok(&[
            "run",
            "--train-counts",
            s(&dev.join("counts.tsv")),
            "--dev-scores",
            s(&dev.join("scores.tsv")),
            "--dev-gold",
            s(&dev.join("gold.tsv")),
            "--test-scores",
            s(&test.join("scores.tsv")),
            "--test-gold",
            s(&test.join("gold.tsv")),
            "--out-dir",
            s(&out),
        ]);
        outputs.push(out);
    }
    let files = [
        "report.json",
        "report.md",
        "report.csv",
        "models/histogram-G1.json",
        "models/isotonic-G5.json",
        "models/scaling-binning-G5.json",
    ];
    for file in files {
        assert_eq!(
            fs::read(outputs[0].join(file)).unwrap(),
            fs::read(outputs[1].join(file)).unwrap(),
            "{file}"
        );
    }
    let csv = fs::read_to_string(outputs[0].join("report.csv")).unwrap();
    assert!(csv.starts_with("method,G,metric,group,value,delta_percent\n"));
    let report =
        EvaluationReport::from_json(&fs::read_to_string(outputs[0].join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report.rows.len(), 7);
}

#[test]
fn help_lists_defaults() {
    let o = ok(&["evaluate", "--help"]);
    let help = String::from_utf8(o.stdout).unwrap();
    for needle in ["[default: 0.01]", "[default: 10]", "[default: 5]"] {
        assert!(help.contains(needle), "{needle} missing from\n{help}");
    }
}
