use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;

use artdetect_core::dataset::FeatureTable;
use artdetect_core::features::extract_all;
use artdetect_core::imaging;
use artdetect_core::matrix::Matrix;
use artdetect_core::neural::{predict_cnn, Tensor};
use artdetect_core::persist::{load_model, ModelFile, ModelParams};

use crate::config::FileConfig;
use crate::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Saved model file
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Feature cache CSV to predict on instead of images
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Image files or directories
    pub paths: Vec<PathBuf>,
}

fn class_name(model: &ModelFile, label: usize) -> String {
    model
        .class_names
        .get(label)
        .cloned()
        .unwrap_or_else(|| label.to_string())
}

fn predict_image(model: &ModelFile, path: &Path) -> CliResult<(usize, f64)> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let raster = imaging::decode(&bytes, path).map_err(CliError::data)?;
    match &model.params {
        ModelParams::Cnn(cnn) => {
            let side = model.extractor.resize_side;
            let resized = imaging::resize_bilinear(&raster, side);
            let mut values = Vec::with_capacity(side * side * 3);
            for p in &resized.pixels {
                values.extend([p[0] as f64, p[1] as f64, p[2] as f64]);
            }
            let image = Tensor::new(vec![side, side, 3], values);
            let (labels, scores) = predict_cnn(cnn, &[image]).map_err(CliError::data)?;
            let score = if scores.cols() == 1 {
                scores.get(0, 0)
            } else {
                scores.get(0, labels[0])
            };
            Ok((labels[0], score))
        }
        _ => {
            let vector = extract_all(&raster, &model.extractor).map_err(CliError::data)?;
            let raw = Matrix::from_rows(&[vector.as_slice().to_vec()]).map_err(CliError::data)?;
            let scored = model.predict_features(&raw).map_err(CliError::data)?;
            Ok(scored[0])
        }
    }
}

fn collect_images(path: &Path, out: &mut Vec<PathBuf>) -> CliResult<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for entry in entries {
            collect_images(&entry, out)?;
        }
    } else {
        out.push(path.to_path_buf());
    }
    Ok(())
}

pub fn run(args: PredictArgs, cfg: &FileConfig) -> CliResult<()> {
    let model_path: PathBuf = super::required(cfg, args.model.clone(), "model")?;
    let model = load_model(&model_path).map_err(CliError::data)?;

    let csv = cfg.resolve_opt(args.csv.clone(), "csv")?;
    if let Some(csv) = &csv {
        if matches!(model.params, ModelParams::Cnn(_)) {
            return Err(CliError::Usage(
                "CNN models predict on images, not feature CSVs".into(),
            ));
        }
        let table = FeatureTable::read_csv(csv).map_err(CliError::data)?;
        let scored = model
            .predict_features(&table.features)
            .map_err(CliError::data)?;
        for (i, (label, score)) in scored.iter().enumerate() {
            println!(
                "{}\t{}\t{}",
                table.paths[i],
                class_name(&model, *label),
                score
            );
        }
        return Ok(());
    }

    if args.paths.is_empty() {
        return Err(CliError::Usage(
            "provide image paths or --csv features.csv".into(),
        ));
    }
    let mut files = Vec::new();
    for path in &args.paths {
        collect_images(path, &mut files)?;
    }
    let mut failures = 0usize;
    for file in &files {
        match predict_image(&model, file) {
            Ok((label, score)) => {
                println!(
                    "{}\t{}\t{}",
                    file.display(),
                    class_name(&model, label),
                    score
                );
            }
            Err(e) => {
                failures += 1;
                eprintln!("warning: {}: {}", file.display(), e.message());
            }
        }
    }
    if failures == files.len() && !files.is_empty() {
        return Err(CliError::Data("every input failed to decode".into()));
    }
    Ok(())
}
