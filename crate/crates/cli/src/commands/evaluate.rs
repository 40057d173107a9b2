use std::fs;
use std::path::PathBuf;

use clap::Args;

use artdetect_core::dataset::{scan, FeatureTable};
use artdetect_core::eval::{confusion, render_report, ExperimentReport};
use artdetect_core::imaging;
use artdetect_core::neural::{predict_cnn, Tensor};
use artdetect_core::persist::{load_model, ModelFile, ModelParams};
use artdetect_core::Task;

use crate::config::FileConfig;
use crate::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Saved model file
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Labeled feature cache CSV (lr/svm/mlp models)
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Labeled image tree (any model)
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Report directory (default reports/TIMESTAMP)
    #[arg(long)]
    pub report_dir: Option<PathBuf>,
}

/// Maps each row's class name into the model's label space.
fn map_labels(
    model: &ModelFile,
    class_names: &[String],
    class_labels: &[usize],
) -> CliResult<Vec<usize>> {
    match model.task {
        Task::Binary => Ok(class_labels
            .iter()
            .map(|&c| usize::from(artdetect_core::dataset::is_ai_class(&class_names[c])))
            .collect()),
        Task::Multiclass => class_labels
            .iter()
            .map(|&c| {
                let name = &class_names[c];
                model
                    .class_names
                    .iter()
                    .position(|m| m == name)
                    .ok_or_else(|| {
                        CliError::Data(format!(
                            "label error: class '{name}' not known to this model"
                        ))
                    })
            })
            .collect(),
    }
}

pub fn run(args: EvaluateArgs, cfg: &FileConfig) -> CliResult<()> {
    let model_path: PathBuf = super::required(cfg, args.model.clone(), "model")?;
    let model = load_model(&model_path).map_err(CliError::data)?;
    let report_dir = super::resolve_report_dir(args.report_dir.clone(), cfg)?;
    let features = cfg.resolve_opt(args.features.clone(), "features")?;
    let images = cfg.resolve_opt(args.images.clone(), "images")?;

    let (y_true, y_pred) = match (&features, &images) {
        (Some(csv), None) => {
            if matches!(model.params, ModelParams::Cnn(_)) {
                return Err(CliError::Usage(
                    "CNN models evaluate on --images, not --features".into(),
                ));
            }
            let table = FeatureTable::read_csv(csv).map_err(CliError::data)?;
            let scored = model
                .predict_features(&table.features)
                .map_err(CliError::data)?;
            let y_true = map_labels(&model, &table.class_names, &table.class_labels)?;
            (
                y_true,
                scored.into_iter().map(|(l, _)| l).collect::<Vec<_>>(),
            )
        }
        (None, Some(root)) => {
            let manifest = scan(root).map_err(CliError::data)?;
            for warning in &manifest.warnings {
                eprintln!("warning: {warning}");
            }
            let mut y_true_all = Vec::new();
            let mut y_pred_all = Vec::new();
            match &model.params {
                ModelParams::Cnn(cnn) => {
                    let mut images = Vec::new();
                    for entry in &manifest.entries {
                        let bytes = fs::read(&entry.path).map_err(|e| {
                            CliError::Data(format!("{}: {e}", entry.path.display()))
                        })?;
                        let raster =
                            imaging::decode(&bytes, &entry.path).map_err(CliError::data)?;
                        let resized =
                            imaging::resize_bilinear(&raster, model.extractor.resize_side);
                        let mut values = Vec::new();
                        for p in &resized.pixels {
                            values.extend([p[0] as f64, p[1] as f64, p[2] as f64]);
                        }
                        images.push(Tensor::new(
                            vec![model.extractor.resize_side, model.extractor.resize_side, 3],
                            values,
                        ));
                    }
                    let (labels, _) = predict_cnn(cnn, &images).map_err(CliError::data)?;
                    y_pred_all = labels;
                    let class_labels: Vec<usize> =
                        manifest.entries.iter().map(|e| e.class).collect();
                    y_true_all = map_labels(&model, &manifest.class_names, &class_labels)?;
                }
                _ => {
                    for entry in &manifest.entries {
                        let bytes = fs::read(&entry.path).map_err(|e| {
                            CliError::Data(format!("{}: {e}", entry.path.display()))
                        })?;
                        let raster =
                            imaging::decode(&bytes, &entry.path).map_err(CliError::data)?;
                        let vector =
                            artdetect_core::features::extract_all(&raster, &model.extractor)
                                .map_err(CliError::data)?;
                        let raw = artdetect_core::matrix::Matrix::from_rows(&[vector
                            .as_slice()
                            .to_vec()])
                        .map_err(CliError::data)?;
                        let scored = model.predict_features(&raw).map_err(CliError::data)?;
                        y_pred_all.push(scored[0].0);
                        let class_labels = vec![entry.class];
                        y_true_all.extend(map_labels(
                            &model,
                            &manifest.class_names,
                            &class_labels,
                        )?);
                    }
                }
            }
            (y_true_all, y_pred_all)
        }
        _ => {
            return Err(CliError::Usage(
                "provide exactly one of --features or --images".into(),
            ))
        }
    };

    let matrix = confusion(&y_true, &y_pred, &model.class_names).map_err(CliError::data)?;
    let report = ExperimentReport::new(
        model.task,
        model.family(),
        format!("evaluation of {}", model_path.display()),
        matrix.accuracy(),
        matrix,
        None,
        None,
        model.metadata.seed,
        model.metadata.extractor_config_hash.clone(),
    );
    render_report(&report, &report_dir).map_err(CliError::data)?;
    println!("accuracy: {}", report.test_accuracy);
    println!("report: {}", report_dir.display());
    Ok(())
}
