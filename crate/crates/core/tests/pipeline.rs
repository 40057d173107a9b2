//! Cross-module integration: directory scanning, the cached feature table,
//! splits feeding training, and model persistence end to end.

use std::fs;
use std::path::Path;

use artdetect_core::dataset::{
    build_feature_table, kfold, metadata_path, scan, stratified_split, FeatureTable,
};
use artdetect_core::features::{ExtractorConfig, FEATURE_NAMES};
use artdetect_core::matrix::Matrix;
use artdetect_core::models::{train_lr, LRConfig};
use artdetect_core::persist::{
    load_model, save_model, ModelFile, ModelMetadata, ModelParams, MODEL_FORMAT, MODEL_VERSION,
};
use artdetect_core::preprocess::Scaler;
use artdetect_core::rng::Rng;
use artdetect_core::select::{evaluate_cv, FamilyConfig};
use artdetect_core::{Error, Task};

fn write_png(path: &Path, side: u32, mut pixel: impl FnMut(u32, u32) -> [u8; 3]) {
    let img = image::RgbImage::from_fn(side, side, |x, y| image::Rgb(pixel(x, y)));
    img.save(path).unwrap();
}

/// Two-class tree: smooth ramps vs uniform noise.
fn toy_tree(root: &Path, per_class: usize, side: u32, seed: u64) {
    let mut rng = Rng::new(seed);
    let smooth = root.join("Human-smooth");
    let noisy = root.join("AI-noise");
    fs::create_dir_all(&smooth).unwrap();
    fs::create_dir_all(&noisy).unwrap();
    for i in 0..per_class {
        let slope = rng.uniform(0.5, 2.0);
        let offset = rng.uniform(0.0, 60.0);
        write_png(&smooth.join(format!("img{i:03}.png")), side, |x, y| {
            let v = (offset + slope * (x + y) as f64).clamp(0.0, 255.0) as u8;
            [v, v / 2 + 30, 255 - v]
        });
        write_png(&noisy.join(format!("img{i:03}.png")), side, |_, _| {
            [
                rng.below(256) as u8,
                rng.below(256) as u8,
                rng.below(256) as u8,
            ]
        });
    }
}

fn small_cfg() -> ExtractorConfig {
    ExtractorConfig {
        resize_side: 32,
        ..ExtractorConfig::default()
    }
}

#[test]
fn scan_orders_classes_and_warns_on_junk() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 3, 16, 1);
    fs::write(dir.path().join("Human-smooth/notes.txt"), "not an image").unwrap();
    fs::create_dir(dir.path().join("Zed-empty")).unwrap();

    let manifest = scan(dir.path()).unwrap();
    assert_eq!(
        manifest.class_names,
        vec!["AI-noise", "Human-smooth", "Zed-empty"]
    );
    assert_eq!(manifest.entries.len(), 6);
    assert!(manifest.warnings.iter().any(|w| w.contains("notes.txt")));
    assert!(manifest.warnings.iter().any(|w| w.contains("Zed-empty")));

    let again = scan(dir.path()).unwrap();
    assert_eq!(manifest.class_names, again.class_names);
    let paths: Vec<_> = manifest.entries.iter().map(|e| e.path.clone()).collect();
    let paths_again: Vec<_> = again.entries.iter().map(|e| e.path.clone()).collect();
    assert_eq!(paths, paths_again);
}

#[test]
fn feature_cache_extracts_then_reuses() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 4, 24, 7);
    let csv = dir.path().join("features.csv");
    let manifest = scan(dir.path()).unwrap();
    let cfg = small_cfg();

    let first = build_feature_table(&manifest, &cfg, 0, &csv).unwrap();
    assert_eq!(first.extracted, 8);
    assert_eq!(first.cached, 0);
    assert!(first.failures.is_empty());
    assert_eq!(first.table.n_rows(), 8);
    assert!(metadata_path(&csv).exists());

    let second = build_feature_table(&manifest, &cfg, 0, &csv).unwrap();
    assert_eq!(second.extracted, 0);
    assert_eq!(second.cached, 8);
    assert_eq!(second.table, first.table);

    // touching one file's bytes re-extracts only that file
    let victim = &manifest.entries[0].path;
    let mut bytes = fs::read(victim).unwrap();
    let img = image::load_from_memory(&bytes).unwrap().to_rgb8();
    let mut img = image::DynamicImage::ImageRgb8(img).to_rgb8();
    img.put_pixel(0, 0, image::Rgb([1, 2, 3]));
    bytes.clear();
    image::DynamicImage::ImageRgb8(img)
        .write_to(
            &mut std::io::Cursor::new(&mut bytes),
            image::ImageFormat::Png,
        )
        .unwrap();
    fs::write(victim, bytes).unwrap();
    let third = build_feature_table(&manifest, &cfg, 0, &csv).unwrap();
    assert_eq!(third.extracted, 1);
    assert_eq!(third.cached, 7);
}

#[test]
fn changed_extractor_config_invalidates_cache() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 2, 24, 3);
    let csv = dir.path().join("features.csv");
    let manifest = scan(dir.path()).unwrap();

    build_feature_table(&manifest, &small_cfg(), 0, &csv).unwrap();
    let other = ExtractorConfig {
        resize_side: 48,
        ..ExtractorConfig::default()
    };
    let rerun = build_feature_table(&manifest, &other, 0, &csv).unwrap();
    assert_eq!(rerun.extracted, 4);
    assert_eq!(rerun.cached, 0);
}

#[test]
fn corrupt_image_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 3, 24, 9);
    fs::write(dir.path().join("AI-noise/broken.png"), b"not a png").unwrap();
    let csv = dir.path().join("features.csv");
    let manifest = scan(dir.path()).unwrap();
    let outcome = build_feature_table(&manifest, &small_cfg(), 0, &csv).unwrap();
    assert_eq!(outcome.table.n_rows(), 6);
    assert_eq!(outcome.failures.len(), 1);
    assert!(outcome.failures[0].0.ends_with("broken.png"));
}

#[test]
fn all_images_failing_is_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("AI-x")).unwrap();
    fs::create_dir_all(dir.path().join("Human-y")).unwrap();
    fs::write(dir.path().join("AI-x/a.png"), b"junk").unwrap();
    fs::write(dir.path().join("Human-y/b.png"), b"junk").unwrap();
    let manifest = scan(dir.path()).unwrap();
    let result = build_feature_table(&manifest, &small_cfg(), 0, &dir.path().join("features.csv"));
    assert!(matches!(result, Err(Error::EmptyDataset)));
}

#[test]
fn extracted_table_trains_and_separates() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 15, 32, 11);
    let csv = dir.path().join("features.csv");
    let manifest = scan(dir.path()).unwrap();
    let outcome = build_feature_table(&manifest, &small_cfg(), 0, &csv).unwrap();
    let table = outcome.table;

    let split = stratified_split(&table, &[0.8, 0.2], 5).unwrap();
    let train = table.select_rows(&split.train);
    let test = table.select_rows(&split.test);
    let scaler = Scaler::fit(&train.features).unwrap();
    let xt = scaler.transform(&train.features).unwrap();
    let xv = scaler.transform(&test.features).unwrap();
    let model = train_lr(
        &xt,
        &train.labels(Task::Binary),
        &LRConfig::default(),
        Task::Binary,
    )
    .unwrap();
    let (pred, _) = artdetect_core::models::predict_lr(&model, &xv).unwrap();
    let acc = artdetect_core::eval::accuracy(&test.labels(Task::Binary), &pred).unwrap();
    assert!(acc >= 0.8, "smooth vs noise should separate, got {acc}");
}

#[test]
fn csv_reload_matches_in_memory_table() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 3, 24, 13);
    let csv = dir.path().join("features.csv");
    let manifest = scan(dir.path()).unwrap();
    let outcome = build_feature_table(&manifest, &small_cfg(), 0, &csv).unwrap();
    let reloaded = FeatureTable::read_csv(&csv).unwrap();
    assert_eq!(reloaded, outcome.table);
    // header contract, bit for bit
    let text = fs::read_to_string(&csv).unwrap();
    let header = text.lines().next().unwrap();
    let expected = format!("{},class_label,binary_label,path", FEATURE_NAMES.join(","));
    assert_eq!(header, expected);
}

#[test]
fn fold_training_never_reads_fold_test_rows() {
    // poisoning a fold's test rows must not change anything fitted on its
    // training rows
    let mut rng = Rng::new(2);
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|_| (0..39).map(|_| rng.uniform(-1.0, 1.0)).collect())
        .collect();
    let table = synthetic_table(rows.clone());
    let folds = kfold(&table, 4, 17).unwrap();
    let fold = &folds[0];

    let mut poisoned_rows = rows.clone();
    for &i in &fold.test {
        for v in &mut poisoned_rows[i] {
            *v = 1e9;
        }
    }
    let poisoned = synthetic_table(poisoned_rows);

    let x_clean = table.features.select_rows(&fold.train);
    let x_poisoned = poisoned.features.select_rows(&fold.train);
    assert_eq!(x_clean, x_poisoned);

    let labels = table.labels(Task::Binary);
    let y: Vec<usize> = fold.train.iter().map(|&i| labels[i]).collect();
    let sc = Scaler::fit(&x_clean).unwrap();
    let sp = Scaler::fit(&x_poisoned).unwrap();
    assert_eq!(sc, sp);
    let mc = train_lr(
        &sc.transform(&x_clean).unwrap(),
        &y,
        &LRConfig::default(),
        Task::Binary,
    )
    .unwrap();
    let mp = train_lr(
        &sp.transform(&x_poisoned).unwrap(),
        &y,
        &LRConfig::default(),
        Task::Binary,
    )
    .unwrap();
    assert_eq!(mc, mp);
}

fn synthetic_table(rows: Vec<Vec<f64>>) -> FeatureTable {
    let n = rows.len();
    let class_labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    FeatureTable {
        features: Matrix::from_rows(&rows).unwrap(),
        binary_labels: class_labels.iter().map(|&c| c as u8).collect(),
        paths: (0..n).map(|i| format!("r{i}.png")).collect(),
        class_labels,
        class_names: vec!["Human-a".into(), "AI-b".into()],
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
    }
}

#[test]
fn doubling_raw_features_leaves_predictions_unchanged() {
    // models only ever see standardized inputs, so a uniform pre-scaler
    // rescale of the raw features must not move a single prediction
    let mut rng = Rng::new(77);
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..39).map(|_| rng.uniform(-3.0, 3.0)).collect())
        .collect();
    let doubled: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|v| v * 2.0).collect())
        .collect();
    let y: Vec<usize> = rows
        .iter()
        .map(|r| usize::from(r[0] + r[7] > 0.0))
        .collect();

    let fit_predict = |data: &[Vec<f64>]| -> Vec<usize> {
        let x = Matrix::from_rows(data).unwrap();
        let scaler = Scaler::fit(&x).unwrap();
        let xs = scaler.transform(&x).unwrap();
        let model = train_lr(&xs, &y, &LRConfig::default(), Task::Binary).unwrap();
        artdetect_core::models::predict_lr(&model, &xs).unwrap().0
    };
    assert_eq!(fit_predict(&rows), fit_predict(&doubled));

    let fit_predict_svm = |data: &[Vec<f64>]| -> Vec<usize> {
        let x = Matrix::from_rows(data).unwrap();
        let scaler = Scaler::fit(&x).unwrap();
        let xs = scaler.transform(&x).unwrap();
        let cfg = artdetect_core::models::SVMConfig::default();
        let model = artdetect_core::models::train_svm(&xs, &y, &cfg, Task::Binary).unwrap();
        artdetect_core::models::predict_svm(&model, &xs).unwrap()
    };
    assert_eq!(fit_predict_svm(&rows), fit_predict_svm(&doubled));
}

#[test]
fn evaluate_cv_works_on_extracted_features() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 10, 24, 21);
    let csv = dir.path().join("features.csv");
    let manifest = scan(dir.path()).unwrap();
    let table = build_feature_table(&manifest, &small_cfg(), 0, &csv)
        .unwrap()
        .table;
    let cols: Vec<usize> = (0..39).collect();
    let cfg = FamilyConfig::Lr(LRConfig::default());
    let (mean, per_fold) = evaluate_cv(&cfg, &table, &cols, Task::Binary, 5, 3).unwrap();
    assert_eq!(per_fold.len(), 5);
    assert!((0.0..=1.0).contains(&mean));
}

#[test]
fn model_file_predicts_after_reload() {
    let dir = tempfile::tempdir().unwrap();
    toy_tree(dir.path(), 8, 24, 31);
    let csv = dir.path().join("features.csv");
    let manifest = scan(dir.path()).unwrap();
    let table = build_feature_table(&manifest, &small_cfg(), 0, &csv)
        .unwrap()
        .table;
    let scaler = Scaler::fit(&table.features).unwrap();
    let x = scaler.transform(&table.features).unwrap();
    let y = table.labels(Task::Binary);
    let lr = train_lr(&x, &y, &LRConfig::default(), Task::Binary).unwrap();

    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        task: Task::Binary,
        class_names: vec!["human".into(), "AI".into()],
        feature_names: Some(FEATURE_NAMES.iter().map(|s| s.to_string()).collect()),
        scaler: Some(scaler),
        extractor: small_cfg(),
        params: ModelParams::Lr(lr),
        metadata: ModelMetadata {
            seed: 0,
            extractor_config_hash: small_cfg().hash(),
            created_by: "pipeline-test".into(),
        },
    };
    let path = dir.path().join("model.json");
    save_model(&path, &file).unwrap();
    let loaded = load_model(&path).unwrap();
    let a = file.predict_features(&table.features).unwrap();
    let b = loaded.predict_features(&table.features).unwrap();
    assert_eq!(a, b);
    // overfit toy model recalls its training labels
    let labels: Vec<usize> = a.iter().map(|(l, _)| *l).collect();
    assert_eq!(labels, y);
}
