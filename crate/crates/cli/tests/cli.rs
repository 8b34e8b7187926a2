//! End-to-end tests of the `bespoke` binary: artifact layout, exit codes,
//! manifest replay, and worker-count independence of written reports.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bespoke"))
        .args(args)
        .output()
        .expect("spawn bespoke")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn dataset_args(model: &str) -> Vec<String> {
    vec![
        "--dataset".into(),
        fixtures().join("dataset.csv").display().to_string(),
        "--label".into(),
        "quality".into(),
        "--model".into(),
        fixtures().join(model).display().to_string(),
    ]
}

fn run_with(common: &[String], extra: &[&str]) -> Output {
    let mut args: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
    args.extend_from_slice(common);
    Command::new(env!("CARGO_BIN_EXE_bespoke"))
        .args(&args)
        .output()
        .expect("spawn bespoke")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn synth_verifies_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let common = dataset_args("svm_regressor.json");
    let out = run_with(
        &common,
        &["synth", "-o", dir.path().to_str().unwrap()],
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("0 mismatches"), "{text}");
    for f in ["netlist.json", "netlist.v", "area.json", "run-manifest.json"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let hdl = read(&dir.path().join("netlist.v"));
    assert!(hdl.contains("module"), "{hdl}");
}

#[test]
fn eval_reports_fixture_accuracies() {
    let dir = tempfile::tempdir().unwrap();
    let common = dataset_args("mlp_classifier.json");
    let out = run_with(&common, &["eval", "-o", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    // The recorded reference accuracies of the shipped fixture.
    assert!(text.contains("train accuracy 0.7792"), "{text}");
    assert!(text.contains("test  accuracy 0.7700"), "{text}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["synth", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
}

#[test]
fn bad_threshold_is_a_usage_error() {
    let common = dataset_args("svm_regressor.json");
    let out = run_with(&common, &["explore", "--tau-grid", "0.3,0.9"]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("outside"), "{}", stderr(&out));

    // non-finite range bounds must be rejected, not expanded
    let out = run_with(&common, &["explore", "--tau-grid", "0.8:nan:0.05"]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("finite"), "{}", stderr(&out));
}

#[test]
fn missing_model_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "eval",
        "--dataset",
        fixtures().join("dataset.csv").to_str().unwrap(),
        "--label",
        "quality",
        "--model",
        dir.path().join("nope.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("explore"));
}

#[test]
fn area_table_is_zero_exactly_at_powers_of_two() {
    let out = run(&["area-table"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut area = std::collections::BTreeMap::new();
    for line in text.lines().skip(1) {
        let (w, a) = line.split_once(',').expect("w,area row");
        area.insert(w.parse::<i64>().unwrap(), a.parse::<f64>().unwrap());
    }
    assert_eq!(text.lines().count(), 257); // header + full signed 8-bit range
    // Multiplying by a power of two is pure wiring. (Other coefficients may
    // also reach zero when their partial products never overlap, e.g. 17
    // with 4-bit inputs — that is the optimizer working, not an error.)
    for w in [0, 1, 2, 4, 8, 16, 32, 64] {
        assert_eq!(area[&w], 0.0, "w={w}");
    }
    for w in [3, -1, 127, -128] {
        assert!(area[&w] > 0.0, "w={w} should cost gates");
    }
}

#[test]
fn explore_emits_reports_and_prune_runs() {
    let dir = tempfile::tempdir().unwrap();
    let common = dataset_args("svm_regressor.json");
    let out = run_with(
        &common,
        &[
            "explore",
            "-o",
            dir.path().to_str().unwrap(),
            "--tau-grid",
            "0.85,0.95",
        ],
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("Pareto front"), "{text}");
    for f in ["report.csv", "report.json", "plot.csv", "run-manifest.json"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }

    // `pareto` re-verifies the emitted report.
    let out = run_with(&common, &["pareto", "-o", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    // `prune` runs standalone on the same data.
    let pdir = tempfile::tempdir().unwrap();
    let out = run_with(
        &common,
        &[
            "prune",
            "-o",
            pdir.path().to_str().unwrap(),
            "--tau-c",
            "0.9",
            "--phi-c",
            "6",
        ],
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(pdir.path().join("pruned.json").exists());
}

#[test]
fn tampered_report_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let common = dataset_args("svm_regressor.json");
    let out = run_with(
        &common,
        &[
            "explore",
            "-o",
            dir.path().to_str().unwrap(),
            "--tau-grid",
            "0.9",
        ],
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let report = dir.path().join("report.json");
    let mut doc: serde_json::Value = serde_json::from_str(&read(&report)).unwrap();
    // Claim an absurd accuracy for the first front member: the stored front
    // no longer matches the one its own points induce.
    doc["front"][0]["accuracy"] = serde_json::json!(2.0);
    std::fs::write(&report, serde_json::to_string_pretty(&doc).unwrap()).unwrap();

    let out = run_with(&common, &["pareto", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
}

#[test]
fn manifest_replay_reproduces_reports_byte_for_byte() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let common = dataset_args("svm_regressor.json");
    let out = run_with(
        &common,
        &[
            "explore",
            "-o",
            d1.path().to_str().unwrap(),
            "--tau-grid",
            "0.85,0.95",
        ],
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    // Replay from the manifest alone (only the output directory changes).
    let manifest = d1.path().join("run-manifest.json");
    let out = run(&[
        "explore",
        "--config",
        manifest.to_str().unwrap(),
        "-o",
        d2.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    for f in ["report.csv", "plot.csv"] {
        assert_eq!(
            read(&d1.path().join(f)),
            read(&d2.path().join(f)),
            "{f} differs under replay"
        );
    }
    // report.json embeds relative netlist paths only — identical too.
    assert_eq!(read(&d1.path().join("report.json")), read(&d2.path().join("report.json")));
}

#[test]
fn worker_count_does_not_change_reports() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let common = dataset_args("svm_regressor.json");
    for (dir, workers) in [(&d1, "1"), (&d2, "8")] {
        let out = run_with(
            &common,
            &[
                "explore",
                "-o",
                dir.path().to_str().unwrap(),
                "--tau-grid",
                "0.8:0.95:0.05",
                "--workers",
                workers,
            ],
        );
        assert!(out.status.success(), "stderr: {}", stderr(&out));
    }
    for f in ["report.csv", "report.json", "plot.csv"] {
        assert_eq!(
            read(&d1.path().join(f)),
            read(&d2.path().join(f)),
            "{f} differs across worker counts"
        );
    }
}

#[test]
fn config_file_drives_a_run_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    let cfg = serde_json::json!({
        "dataset": {
            "path": fixtures().join("dataset.csv"),
            "label": "quality",
        },
        "model": fixtures().join("svm_classifier.json"),
        "e": 2,
        "output": dir.path().join("unused"),
    });
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();

    let out_dir = dir.path().join("real");
    let out = run(&[
        "eval",
        "--config",
        cfg_path.to_str().unwrap(),
        "-o",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(out_dir.join("eval.json").exists());
    assert!(!dir.path().join("unused").exists(), "flag override ignored");

    // Unknown config keys are rejected, pointing at the file.
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"modle": "x.json"}"#).unwrap();
    let out = run(&["eval", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("modle"), "{}", stderr(&out));
}
