use std::path::PathBuf;

use clap::Args;

use artdetect_core::dataset::{stratified_split, FeatureTable};
use artdetect_core::eval::{confusion, render_report, ExperimentReport};
use artdetect_core::features::feature_index;
use artdetect_core::persist::save_model;
use artdetect_core::preprocess::Scaler;
use artdetect_core::select::{rfe, train_family, ModelFamily};
use artdetect_core::Task;

use crate::config::FileConfig;
use crate::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct RfeArgs {
    /// Feature cache CSV
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// binary or multiclass
    #[arg(long)]
    pub task: Option<String>,
    /// lr, svm, or mlp
    #[arg(long)]
    pub family: Option<String>,
    /// Cross-validation folds
    #[arg(long)]
    pub folds: Option<usize>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Test fraction of the outer split
    #[arg(long)]
    pub test_ratio: Option<f64>,
    /// Output model file, fitted on the best feature subset
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report directory (default reports/TIMESTAMP)
    #[arg(long)]
    pub report_dir: Option<PathBuf>,
    #[command(flatten)]
    pub family_args: super::FamilyArgs,
}

pub fn run(args: RfeArgs, cfg: &FileConfig) -> CliResult<()> {
    let task: Task = super::required(cfg, args.task.clone(), "task")?
        .parse()
        .map_err(|e: artdetect_core::Error| CliError::Usage(e.to_string()))?;
    let family: ModelFamily = super::required(cfg, args.family.clone(), "family")?
        .parse()
        .map_err(|e: artdetect_core::Error| CliError::Usage(e.to_string()))?;
    let features = super::required(cfg, args.features.clone(), "features")?;
    let out: std::path::PathBuf = super::required(cfg, args.out.clone(), "out")?;
    let folds = cfg.resolve(args.folds, "folds", 5usize)?;
    let seed = cfg.resolve(args.seed, "seed", 0u64)?;
    let test_ratio = cfg.resolve(args.test_ratio, "test-ratio", 0.2f64)?;
    let report_dir = super::resolve_report_dir(args.report_dir.clone(), cfg)?;
    let config = args.family_args.build(family, cfg)?;

    let table = FeatureTable::read_csv(&features).map_err(CliError::data)?;
    let split =
        stratified_split(&table, &[1.0 - test_ratio, test_ratio], seed).map_err(CliError::data)?;
    let train_table = table.select_rows(&split.train);

    let curve = rfe(&config, &train_table, task, folds, seed).map_err(CliError::training)?;
    let best = curve.best().clone();
    println!(
        "rfe: best cv accuracy {} at {} features",
        best.cv_accuracy, best.feature_count
    );

    // final fit on the training partition over the winning subset
    let columns: Vec<usize> = best
        .kept_features
        .iter()
        .map(|n| {
            feature_index(n)
                .ok_or_else(|| CliError::Data(format!("unknown feature '{n}' in curve")))
        })
        .collect::<CliResult<_>>()?;
    let train_projected = train_table.features.select_cols(&columns);
    let scaler = Scaler::fit(&train_projected).map_err(CliError::data)?;
    let x_train = scaler.transform(&train_projected).map_err(CliError::data)?;
    let model = train_family(&config, &x_train, &train_table.labels(task), task)
        .map_err(CliError::training)?;

    let test_table = table.select_rows(&split.test);
    let x_test = scaler
        .transform(&test_table.features.select_cols(&columns))
        .map_err(CliError::data)?;
    let predictions = model.predict(&x_test).map_err(CliError::training)?;
    let label_names = table.label_names(task);
    let matrix =
        confusion(&test_table.labels(task), &predictions, &label_names).map_err(CliError::data)?;

    let extractor = super::train::load_extractor_for(&features);
    let report = ExperimentReport::new(
        task,
        family.as_str(),
        format!("{} (rfe, {} features)", config.render(), best.feature_count),
        best.cv_accuracy,
        matrix,
        Some(curve),
        None,
        seed,
        extractor.hash(),
    );
    render_report(&report, &report_dir).map_err(CliError::data)?;

    let model_file = super::train::feature_model_file(
        task,
        &table,
        model,
        scaler,
        best.kept_features.clone(),
        extractor,
        seed,
    );
    save_model(&out, &model_file).map_err(CliError::data)?;

    println!("test_accuracy: {}", report.test_accuracy);
    println!("report: {}", report_dir.display());
    println!("model: {}", out.display());
    Ok(())
}
