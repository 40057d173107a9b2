use std::fs;
use std::path::PathBuf;

use clap::Args;

use artdetect_core::dataset::{scan, stratified_split, stratified_split_labels, FeatureTable};
use artdetect_core::eval::{confusion, render_report, ExperimentReport};
use artdetect_core::features::{ExtractorConfig, FEATURE_NAMES};
use artdetect_core::imaging;
use artdetect_core::neural::{
    predict_cnn, train_cnn, Architecture, CNNConfig, FinalActivation, Tensor,
};
use artdetect_core::persist::{
    save_model, ModelFile, ModelMetadata, ModelParams, MODEL_FORMAT, MODEL_VERSION,
};
use artdetect_core::preprocess::Scaler;
use artdetect_core::select::{
    evaluate_cv, grid_search, table3_lr_grid, table4_svm_grid, table5_mlp_grid, train_family,
    FeatureModel, GridSpec, ModelFamily,
};
use artdetect_core::Task;

use crate::config::FileConfig;
use crate::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Feature cache CSV (lr/svm/mlp)
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Image tree root (cnn)
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// binary or multiclass
    #[arg(long)]
    pub task: Option<String>,
    /// lr, svm, mlp, or cnn
    #[arg(long)]
    pub family: Option<String>,
    /// Hyperparameter preset to search: table3 (lr), table4 (svm), table5 (mlp)
    #[arg(long)]
    pub grid: Option<String>,
    /// Cross-validation folds
    #[arg(long)]
    pub folds: Option<usize>,
    /// Master seed for splits and folds
    #[arg(long)]
    pub seed: Option<u64>,
    /// Test fraction of the outer split
    #[arg(long)]
    pub test_ratio: Option<f64>,
    /// Output model file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report directory (default reports/TIMESTAMP)
    #[arg(long)]
    pub report_dir: Option<PathBuf>,

    #[command(flatten)]
    pub family_args: super::FamilyArgs,
    #[command(flatten)]
    pub cnn: CnnArgs,
}

#[derive(Args, Debug, Clone)]
pub struct CnnArgs {
    /// CNN input side (images are resized square)
    #[arg(long)]
    pub input_side: Option<usize>,
    /// binary11 or multiclass9 (defaults to match the task)
    #[arg(long)]
    pub arch: Option<String>,
    /// Dropout rate
    #[arg(long)]
    pub dropout: Option<f64>,
    /// L2 weight for the regularized layers of multiclass9
    #[arg(long)]
    pub l2: Option<f64>,
    /// sigmoid or softmax head
    #[arg(long)]
    pub final_activation: Option<String>,
    /// Adam learning rate
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Training epochs
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size
    #[arg(long)]
    pub batch_size: Option<usize>,
}

pub fn run(args: TrainArgs, cfg: &FileConfig) -> CliResult<()> {
    let task: Task = super::required(cfg, args.task.clone(), "task")?
        .parse()
        .map_err(|e: artdetect_core::Error| CliError::Usage(e.to_string()))?;
    let family_name: String = super::required(cfg, args.family.clone(), "family")?;
    let out = super::required(cfg, args.out.clone(), "out")?;
    let seed = cfg.resolve(args.seed, "seed", 0u64)?;
    let report_dir = super::resolve_report_dir(args.report_dir.clone(), cfg)?;

    if family_name == "cnn" {
        return train_cnn_command(&args, cfg, task, seed, &out, &report_dir);
    }
    let family: ModelFamily = family_name
        .parse()
        .map_err(|e: artdetect_core::Error| CliError::Usage(e.to_string()))?;
    let features = cfg
        .resolve_opt(args.features.clone(), "features")?
        .ok_or_else(|| CliError::Usage("--features is required for lr/svm/mlp".into()))?;
    let folds = cfg.resolve(args.folds, "folds", 5usize)?;
    let test_ratio = cfg.resolve(args.test_ratio, "test-ratio", 0.2f64)?;

    let table = FeatureTable::read_csv(&features).map_err(CliError::data)?;
    let split =
        stratified_split(&table, &[1.0 - test_ratio, test_ratio], seed).map_err(CliError::data)?;
    let train_table = table.select_rows(&split.train);

    // choose the configuration: preset grid search or the fixed flags
    let grid_choice = cfg.resolve_opt(args.grid.clone(), "grid")?;
    let (best_config, cv_mean, grid_csv) = match grid_choice.as_deref() {
        Some(preset) => {
            let spec = preset_grid(preset, family)?;
            let result =
                grid_search(&spec, &train_table, task, folds, seed).map_err(CliError::training)?;
            let csv = super::grid_results_csv(&result, folds);
            println!(
                "grid: {} cells, best cell {} ({})",
                result.cells.len(),
                result.best_index,
                result.best_config.render()
            );
            (result.best_config, result.best_mean_accuracy, Some(csv))
        }
        None => {
            let config = args.family_args.build(family, cfg)?;
            let all_cols: Vec<usize> = (0..train_table.n_features()).collect();
            let (mean, _) = evaluate_cv(&config, &train_table, &all_cols, task, folds, seed)
                .map_err(CliError::training)?;
            (config, mean, None)
        }
    };

    // final fit on the full training partition
    let scaler = Scaler::fit(&train_table.features).map_err(CliError::data)?;
    let x_train = scaler
        .transform(&train_table.features)
        .map_err(CliError::data)?;
    let model = train_family(&best_config, &x_train, &train_table.labels(task), task)
        .map_err(CliError::training)?;

    // held-out evaluation
    let test_table = table.select_rows(&split.test);
    let x_test = scaler
        .transform(&test_table.features)
        .map_err(CliError::data)?;
    let predictions = model.predict(&x_test).map_err(CliError::training)?;
    let label_names = table.label_names(task);
    let matrix =
        confusion(&test_table.labels(task), &predictions, &label_names).map_err(CliError::data)?;

    let extractor = load_extractor_for(&features);
    let report = ExperimentReport::new(
        task,
        family.as_str(),
        best_config.render(),
        cv_mean,
        matrix,
        None,
        None,
        seed,
        extractor.hash(),
    );
    render_report(&report, &report_dir).map_err(CliError::data)?;
    if let Some(csv) = grid_csv {
        let path = report_dir.join("grid_results.csv");
        fs::write(&path, csv).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }

    let model_file = feature_model_file(
        task,
        &table,
        model,
        scaler,
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        extractor,
        seed,
    );
    save_model(&out, &model_file).map_err(CliError::data)?;

    println!("cv_mean_accuracy: {cv_mean}");
    println!("test_accuracy: {}", report.test_accuracy);
    println!("report: {}", report_dir.display());
    println!("model: {}", out.display());
    Ok(())
}

fn preset_grid(name: &str, family: ModelFamily) -> CliResult<GridSpec> {
    let spec = match name {
        "table3" => table3_lr_grid(),
        "table4" => table4_svm_grid(),
        "table5" => table5_mlp_grid(),
        other => return Err(CliError::Usage(format!("unknown grid preset '{other}'"))),
    };
    if spec.family != family {
        return Err(CliError::Usage(format!(
            "grid preset '{name}' targets family {}, not {}",
            spec.family.as_str(),
            family.as_str()
        )));
    }
    Ok(spec)
}

/// The sidecar next to a feature CSV, when present, says how the features
/// were extracted; predictions on raw images re-use it.
pub fn load_extractor_for(csv: &std::path::Path) -> ExtractorConfig {
    let meta = artdetect_core::dataset::metadata_path(csv);
    if let Ok(text) = fs::read_to_string(meta) {
        if let Ok(meta) = serde_json::from_str::<artdetect_core::dataset::CacheMetadata>(&text) {
            return meta.extractor;
        }
    }
    ExtractorConfig::default()
}

pub fn feature_model_file(
    task: Task,
    table: &FeatureTable,
    model: FeatureModel,
    scaler: Scaler,
    feature_names: Vec<String>,
    extractor: ExtractorConfig,
    seed: u64,
) -> ModelFile {
    let params = match model {
        FeatureModel::Lr(m) => ModelParams::Lr(m),
        FeatureModel::Svm(m) => ModelParams::Svm(m),
        FeatureModel::Mlp(m) => ModelParams::Mlp(m),
    };
    ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        task,
        class_names: table.label_names(task),
        feature_names: Some(feature_names),
        scaler: Some(scaler),
        extractor: extractor.clone(),
        params,
        metadata: ModelMetadata {
            seed,
            extractor_config_hash: extractor.hash(),
            created_by: format!("artdetect {}", env!("CARGO_PKG_VERSION")),
        },
    }
}

fn train_cnn_command(
    args: &TrainArgs,
    cfg: &FileConfig,
    task: Task,
    seed: u64,
    out: &std::path::Path,
    report_dir: &std::path::Path,
) -> CliResult<()> {
    let images_root = cfg
        .resolve_opt(args.images.clone(), "images")?
        .ok_or_else(|| CliError::Usage("--images is required for the cnn family".into()))?;
    let input_side = cfg.resolve(args.cnn.input_side, "input-side", 64usize)?;
    let arch_default = match task {
        Task::Binary => "binary11",
        Task::Multiclass => "multiclass9",
    };
    let arch = match cfg
        .resolve(args.cnn.arch.clone(), "arch", arch_default.to_string())?
        .as_str()
    {
        "binary11" => Architecture::Binary11,
        "multiclass9" => Architecture::Multiclass9,
        other => return Err(CliError::Usage(format!("unknown architecture '{other}'"))),
    };
    let final_activation = match cfg
        .resolve(
            args.cnn.final_activation.clone(),
            "final-activation",
            "sigmoid".to_string(),
        )?
        .as_str()
    {
        "sigmoid" => FinalActivation::Sigmoid,
        "softmax" => FinalActivation::Softmax,
        other => {
            return Err(CliError::Usage(format!(
                "unknown final activation '{other}'"
            )))
        }
    };
    let (dropout_default, l2_default, epochs_default) = match arch {
        Architecture::Binary11 => (0.1, 0.0, 4usize),
        Architecture::Multiclass9 => (0.5, 0.001, 18usize),
    };

    let manifest = scan(&images_root).map_err(CliError::data)?;
    for warning in &manifest.warnings {
        eprintln!("warning: {warning}");
    }
    if manifest.entries.is_empty() {
        return Err(CliError::Data("no images found".into()));
    }
    let mut images = Vec::with_capacity(manifest.entries.len());
    let mut labels = Vec::with_capacity(manifest.entries.len());
    let mut class_labels = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let bytes = fs::read(&entry.path)
            .map_err(|e| CliError::Data(format!("{}: {e}", entry.path.display())))?;
        let raster = imaging::decode(&bytes, &entry.path).map_err(CliError::data)?;
        let resized = imaging::resize_bilinear(&raster, input_side);
        let mut values = Vec::with_capacity(input_side * input_side * 3);
        for p in &resized.pixels {
            values.extend([p[0] as f64, p[1] as f64, p[2] as f64]);
        }
        images.push(Tensor::new(vec![input_side, input_side, 3], values));
        class_labels.push(entry.class);
        let class_name = &manifest.class_names[entry.class];
        labels.push(match task {
            Task::Binary => usize::from(artdetect_core::dataset::is_ai_class(class_name)),
            Task::Multiclass => entry.class,
        });
    }
    let n_classes = match task {
        Task::Binary => 2,
        Task::Multiclass => manifest.class_names.len(),
    };

    let cnn_config = CNNConfig {
        input_side,
        input_channels: 3,
        architecture: arch,
        dropout_rate: cfg.resolve(args.cnn.dropout, "dropout", dropout_default)?,
        l2_weight: cfg.resolve(args.cnn.l2, "l2", l2_default)?,
        final_activation,
        learning_rate: cfg.resolve(args.cnn.learning_rate, "learning-rate", 0.001f64)?,
        epochs: cfg.resolve(args.cnn.epochs, "epochs", epochs_default)?,
        batch_size: cfg.resolve(args.cnn.batch_size, "batch-size", 32usize)?,
        seed,
        n_classes,
    };

    // the 80:10:10 train:test:validation protocol, stratified by class
    let split =
        stratified_split_labels(&class_labels, &manifest.class_names, &[0.8, 0.1, 0.1], seed)
            .map_err(CliError::data)?;
    let (model, history) =
        train_cnn(&images, &labels, &split, &cnn_config).map_err(CliError::training)?;

    let test_images: Vec<Tensor> = split.test.iter().map(|&i| images[i].clone()).collect();
    let test_labels: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
    let (predictions, _) = predict_cnn(&model, &test_images).map_err(CliError::training)?;
    let label_names: Vec<String> = match task {
        Task::Binary => vec!["human".into(), "AI".into()],
        Task::Multiclass => manifest.class_names.clone(),
    };
    let matrix = confusion(&test_labels, &predictions, &label_names).map_err(CliError::data)?;
    let final_val_acc = history.last().map(|e| e.val_acc).unwrap_or(0.0);

    let extractor = ExtractorConfig {
        resize_side: input_side,
        ..ExtractorConfig::default()
    };
    let report = ExperimentReport::new(
        task,
        "cnn",
        format!(
            "cnn arch={} dropout={} l2={} epochs={} lr={}",
            match arch {
                Architecture::Binary11 => "binary11",
                Architecture::Multiclass9 => "multiclass9",
            },
            cnn_config.dropout_rate,
            cnn_config.l2_weight,
            cnn_config.epochs,
            cnn_config.learning_rate
        ),
        final_val_acc,
        matrix,
        None,
        Some(history),
        seed,
        extractor.hash(),
    );
    render_report(&report, report_dir).map_err(CliError::data)?;

    let model_file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        task,
        class_names: label_names,
        feature_names: None,
        scaler: None,
        extractor: extractor.clone(),
        params: ModelParams::Cnn(model),
        metadata: ModelMetadata {
            seed,
            extractor_config_hash: extractor.hash(),
            created_by: format!("artdetect {}", env!("CARGO_PKG_VERSION")),
        },
    };
    save_model(out, &model_file).map_err(CliError::data)?;

    println!("validation_accuracy: {final_val_acc}");
    println!("test_accuracy: {}", report.test_accuracy);
    println!("report: {}", report_dir.display());
    println!("model: {}", out.display());
    Ok(())
}
