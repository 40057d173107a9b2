//! End-to-end behavior of the `artdetect` binary: exit codes, cache
//! messages, report artifacts, model round trips, and config precedence.

mod common;

use std::fs;
use std::process::Command;

use common::{artdetect, toy_tree};

#[test]
fn extract_reports_counts_and_caches() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 10, 24, 42);
    let csv = dir.path().join("features.csv");

    let out = artdetect()
        .args(["extract", "--root"])
        .arg(dir.path())
        .args(["--out"])
        .arg(&csv)
        .args(["--resize-side", "32"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("20 extracted, 0 cached"), "{stdout}");

    // the CSV carries 20 data rows and 42 columns
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 21);
    assert_eq!(lines[0].split(',').count(), 42);

    // second run is fully cached
    let out = artdetect()
        .args(["extract", "--root"])
        .arg(dir.path())
        .args(["--out"])
        .arg(&csv)
        .args(["--resize-side", "32"])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("0 extracted, 20 cached"), "{stdout}");

    // per-class histograms exist for every canonical feature
    let histdir = dir.path().join("features.histograms");
    assert!(histdir.join("hog_skewness.csv").exists());
    assert!(histdir.join("red_variance.csv").exists());
    assert!(histdir.join("green_kurtosis.csv").exists());
    assert!(histdir.join("hsv_entropy.csv").exists());
    assert_eq!(fs::read_dir(&histdir).unwrap().count(), 39);
}

#[test]
fn extract_unreadable_root_exits_2() {
    let out = artdetect()
        .args([
            "extract",
            "--root",
            "/nonexistent/definitely-missing",
            "--out",
            "/tmp/unused.csv",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn usage_error_exits_1() {
    let out = artdetect()
        .args(["train", "--task", "noball"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_svm_fixed_config_and_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 12, 24, 7);
    let csv = dir.path().join("features.csv");
    run_ok(
        artdetect()
            .args(["extract", "--root"])
            .arg(dir.path())
            .args(["--out"])
            .arg(&csv)
            .args(["--resize-side", "32"]),
    );

    let model = dir.path().join("model.json");
    let reports = dir.path().join("reports");
    let out = run_ok(
        artdetect()
            .args(["train", "--features"])
            .arg(&csv)
            .args([
                "--task",
                "binary",
                "--family",
                "svm",
                "--svm-c",
                "10",
                "--svm-gamma",
                "auto",
                "--svm-kernel",
                "rbf",
                "--folds",
                "3",
                "--seed",
                "5",
            ])
            .args(["--out"])
            .arg(&model)
            .args(["--report-dir"])
            .arg(&reports),
    );
    assert!(out.contains("test_accuracy:"));
    for artifact in ["summary.txt", "accuracy.csv", "confusion.csv"] {
        assert!(reports.join(artifact).exists(), "{artifact} missing");
    }

    // model file is versioned JSON with an embedded scaler
    let model_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(model_json["format"], "artdetect-model");
    assert_eq!(model_json["version"], 1);
    assert!(model_json["scaler"]["means"].is_array());

    // predict on one training image: path, label, score
    let sample = fs::read_dir(dir.path().join("AI-noise"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let out = run_ok(
        artdetect()
            .args(["predict", "--model"])
            .arg(&model)
            .arg(&sample),
    );
    let fields: Vec<&str> = out.lines().next().unwrap().split('\t').collect();
    assert_eq!(fields.len(), 3);
    assert_eq!(fields[1], "AI");

    // info understands both artifacts
    let info = run_ok(artdetect().arg("info").arg(&model));
    assert!(info.contains("family: svm"));
    let info = run_ok(artdetect().arg("info").arg(&csv));
    assert!(info.contains("rows: 24"));
}

#[test]
fn same_seed_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 10, 24, 3);
    let csv = dir.path().join("features.csv");
    run_ok(
        artdetect()
            .args(["extract", "--root"])
            .arg(dir.path())
            .args(["--out"])
            .arg(&csv)
            .args(["--resize-side", "32"]),
    );
    let run = |tag: &str| {
        let model = dir.path().join(format!("model-{tag}.json"));
        let reports = dir.path().join(format!("reports-{tag}"));
        run_ok(
            artdetect()
                .args(["train", "--features"])
                .arg(&csv)
                .args([
                    "--task", "binary", "--family", "lr", "--lr-c", "1", "--folds", "3", "--seed",
                    "11",
                ])
                .args(["--out"])
                .arg(&model)
                .args(["--report-dir"])
                .arg(&reports),
        );
        (model, reports)
    };
    let (model_a, reports_a) = run("a");
    let (model_b, reports_b) = run("b");
    assert_eq!(fs::read(&model_a).unwrap(), fs::read(&model_b).unwrap());
    for artifact in ["summary.txt", "accuracy.csv", "confusion.csv"] {
        assert_eq!(
            fs::read(reports_a.join(artifact)).unwrap(),
            fs::read(reports_b.join(artifact)).unwrap(),
            "{artifact}"
        );
    }
}

#[test]
fn rfe_writes_curve_and_subset_model() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 12, 24, 9);
    let csv = dir.path().join("features.csv");
    run_ok(
        artdetect()
            .args(["extract", "--root"])
            .arg(dir.path())
            .args(["--out"])
            .arg(&csv)
            .args(["--resize-side", "32"]),
    );
    let model = dir.path().join("rfe-model.json");
    let reports = dir.path().join("rfe-reports");
    let out = run_ok(
        artdetect()
            .args(["rfe", "--features"])
            .arg(&csv)
            .args([
                "--task", "binary", "--family", "lr", "--folds", "3", "--seed", "2",
            ])
            .args(["--out"])
            .arg(&model)
            .args(["--report-dir"])
            .arg(&reports),
    );
    assert!(out.contains("rfe: best cv accuracy"));
    let curve = fs::read_to_string(reports.join("rfe_curve.csv")).unwrap();
    let lines: Vec<&str> = curve.lines().collect();
    assert_eq!(lines[0], "feature_count,cv_accuracy,dropped_feature");
    assert_eq!(lines.len(), 40); // header + 39 points
    assert!(lines[1].starts_with("39,"));
    assert!(lines[39].starts_with("1,"));

    // the saved model carries the winning subset and predicts through it
    let model_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    let n_features = model_json["feature_names"].as_array().unwrap().len();
    assert!((1..=39).contains(&n_features));
    let sample = fs::read_dir(dir.path().join("Human-smooth"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    run_ok(
        artdetect()
            .args(["predict", "--model"])
            .arg(&model)
            .arg(&sample),
    );
}

#[test]
fn evaluate_on_labeled_csv() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 10, 24, 13);
    let csv = dir.path().join("features.csv");
    run_ok(
        artdetect()
            .args(["extract", "--root"])
            .arg(dir.path())
            .args(["--out"])
            .arg(&csv)
            .args(["--resize-side", "32"]),
    );
    let model = dir.path().join("model.json");
    run_ok(
        artdetect()
            .args(["train", "--features"])
            .arg(&csv)
            .args([
                "--task", "binary", "--family", "lr", "--folds", "3", "--seed", "1",
            ])
            .args(["--out"])
            .arg(&model)
            .args(["--report-dir"])
            .arg(dir.path().join("r1")),
    );
    let out = run_ok(
        artdetect()
            .args(["evaluate", "--model"])
            .arg(&model)
            .args(["--features"])
            .arg(&csv)
            .args(["--report-dir"])
            .arg(dir.path().join("r2")),
    );
    assert!(out.contains("accuracy:"));
    assert!(dir.path().join("r2/confusion.csv").exists());
}

#[test]
fn corrupted_model_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("bad.json");
    fs::write(&model, "{\"format\": \"something-else\"}").unwrap();
    let out = artdetect()
        .args(["predict", "--model"])
        .arg(&model)
        .arg("x.png")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 3, 24, 21);
    let config = dir.path().join("artdetect.conf");
    fs::write(&config, "resize-side = 32\nseed = 9\n").unwrap();

    // config supplies resize side
    let csv = dir.path().join("a.csv");
    run_ok(
        artdetect()
            .args(["--config"])
            .arg(&config)
            .args(["extract", "--root"])
            .arg(dir.path())
            .args(["--out"])
            .arg(&csv),
    );
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["extractor"]["resize_side"], 32);
    assert_eq!(meta["seed"], 9);

    // explicit flag beats the config value
    let csv2 = dir.path().join("b.csv");
    run_ok(
        artdetect()
            .args(["--config"])
            .arg(&config)
            .args(["extract", "--root"])
            .arg(dir.path())
            .args(["--out"])
            .arg(&csv2)
            .args(["--resize-side", "24", "--seed", "4"]),
    );
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["extractor"]["resize_side"], 24);
    assert_eq!(meta["seed"], 4);

    // required flags can come entirely from the config file
    let full = dir.path().join("full.conf");
    let model = dir.path().join("conf-model.json");
    fs::write(
        &full,
        format!(
            "features = {}\ntask = binary\nfamily = lr\nfolds = 2\nseed = 1\nout = {}\nreport-dir = {}\n",
            csv.display(),
            model.display(),
            dir.path().join("conf-reports").display()
        ),
    )
    .unwrap();
    run_ok(artdetect().args(["--config"]).arg(&full).arg("train"));
    assert!(model.exists());
}

#[test]
fn predict_directory_equals_per_file_runs() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 4, 24, 33);
    let csv = dir.path().join("features.csv");
    run_ok(
        artdetect()
            .args(["extract", "--root"])
            .arg(dir.path())
            .args(["--out"])
            .arg(&csv)
            .args(["--resize-side", "32"]),
    );
    let model = dir.path().join("model.json");
    run_ok(
        artdetect()
            .args(["train", "--features"])
            .arg(&csv)
            .args([
                "--task", "binary", "--family", "lr", "--folds", "2", "--seed", "3",
            ])
            .args(["--out"])
            .arg(&model)
            .args(["--report-dir"])
            .arg(dir.path().join("r")),
    );
    let class_dir = dir.path().join("AI-noise");
    let combined = run_ok(
        artdetect()
            .args(["predict", "--model"])
            .arg(&model)
            .arg(&class_dir),
    );
    let mut per_file = String::new();
    let mut files: Vec<_> = fs::read_dir(&class_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for file in files {
        per_file.push_str(&run_ok(
            artdetect()
                .args(["predict", "--model"])
                .arg(&model)
                .arg(&file),
        ));
    }
    assert_eq!(combined, per_file);
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn grid_preset_writes_full_results_table() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 10, 24, 55);
    let csv = dir.path().join("features.csv");
    run_ok(
        artdetect()
            .args(["extract", "--root"])
            .arg(dir.path())
            .args(["--out"])
            .arg(&csv)
            .args(["--resize-side", "32"]),
    );
    let model = dir.path().join("model.json");
    let reports = dir.path().join("grid-reports");
    let out = run_ok(
        artdetect()
            .args(["train", "--features"])
            .arg(&csv)
            .args([
                "--task", "binary", "--family", "svm", "--grid", "table4", "--folds", "3",
                "--seed", "6",
            ])
            .args(["--out"])
            .arg(&model)
            .args(["--report-dir"])
            .arg(&reports),
    );
    assert!(out.contains("grid: 30 cells"), "{out}");
    let grid = fs::read_to_string(reports.join("grid_results.csv")).unwrap();
    let lines: Vec<&str> = grid.lines().collect();
    assert_eq!(lines.len(), 31); // header + 30 cells
    assert_eq!(
        lines[0],
        "cell,params,fold_0,fold_1,fold_2,mean_accuracy,status"
    );
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));

    // mismatched preset/family is a usage error
    let out = artdetect()
        .args(["train", "--features"])
        .arg(&csv)
        .args([
            "--task", "binary", "--family", "lr", "--grid", "table4", "--out",
        ])
        .arg(dir.path().join("x.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cnn_train_writes_epoch_log() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 20, 32, 77);
    let model = dir.path().join("cnn.json");
    let reports = dir.path().join("cnn-reports");
    run_ok(
        artdetect()
            .args(["train", "--family", "cnn", "--images"])
            .arg(dir.path())
            .args([
                "--task",
                "binary",
                "--input-side",
                "24",
                "--epochs",
                "2",
                "--batch-size",
                "8",
                "--seed",
                "1",
            ])
            .args(["--out"])
            .arg(&model)
            .args(["--report-dir"])
            .arg(&reports),
    );
    let epochs = fs::read_to_string(reports.join("epochs.csv")).unwrap();
    let lines: Vec<&str> = epochs.lines().collect();
    assert_eq!(lines[0], "epoch,train_loss,train_acc,val_loss,val_acc");
    assert_eq!(lines.len(), 3);

    // CNN model predicts an image end to end
    let sample = fs::read_dir(dir.path().join("Human-smooth"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let out = run_ok(
        artdetect()
            .args(["predict", "--model"])
            .arg(&model)
            .arg(&sample),
    );
    assert_eq!(out.lines().count(), 1);
    let info = run_ok(artdetect().arg("info").arg(&model));
    assert!(info.contains("layers: 11"));
}

#[test]
fn stratification_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 4, 24, 5);
    let csv = dir.path().join("features.csv");
    run_ok(
        artdetect()
            .args(["extract", "--root"])
            .arg(dir.path())
            .args(["--out"])
            .arg(&csv)
            .args(["--resize-side", "32"]),
    );
    // 3 training samples per class cannot satisfy 5 folds
    let out = artdetect()
        .args(["train", "--features"])
        .arg(&csv)
        .args([
            "--task", "binary", "--family", "lr", "--folds", "5", "--seed", "0", "--out",
        ])
        .arg(dir.path().join("m.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("stratify"), "{stderr}");
}
