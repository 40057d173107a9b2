use std::path::PathBuf;

use clap::Args;

use artdetect_core::dataset::FeatureTable;
use artdetect_core::persist::{load_model, ModelParams};

use crate::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct InfoArgs {
    /// Model file or feature cache CSV
    pub path: PathBuf,
}

pub fn run(args: InfoArgs) -> CliResult<()> {
    let is_csv = args
        .path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    if is_csv {
        let table = FeatureTable::read_csv(&args.path).map_err(CliError::data)?;
        println!("feature cache: {}", args.path.display());
        println!("rows: {}", table.n_rows());
        println!("features: {}", table.n_features());
        println!("classes: {}", table.class_names.join(", "));
        for (c, name) in table.class_names.iter().enumerate() {
            let count = table.class_labels.iter().filter(|&&l| l == c).count();
            let ai = if artdetect_core::dataset::is_ai_class(name) {
                "AI"
            } else {
                "human"
            };
            println!("  {name}: {count} rows ({ai})");
        }
        return Ok(());
    }

    let model = load_model(&args.path).map_err(CliError::data)?;
    println!("model file: {}", args.path.display());
    println!("format: {} v{}", model.format, model.version);
    println!("family: {}", model.family());
    println!("task: {}", model.task.as_str());
    println!("classes: {}", model.class_names.join(", "));
    if let Some(names) = &model.feature_names {
        println!("features: {} of 39", names.len());
    }
    match &model.params {
        ModelParams::Cnn(cnn) => {
            println!(
                "input: {}x{}x{}",
                cnn.input_side, cnn.input_side, cnn.input_channels
            );
            println!("layers: {}", cnn.layers.len());
            let kinds: Vec<&str> = cnn.layers.iter().map(|l| l.kind()).collect();
            println!("stack: {}", kinds.join(" -> "));
        }
        ModelParams::Svm(svm) => {
            let sv: usize = svm
                .machines
                .iter()
                .map(|m| m.svm.support_vectors.rows())
                .sum();
            println!("machines: {}", svm.machines.len());
            println!("support vectors: {sv}");
            if !svm.fully_converged() {
                println!("note: at least one machine stopped before full convergence");
            }
        }
        ModelParams::Lr(lr) => {
            println!("weights: {}x{}", lr.weights.rows(), lr.weights.cols());
        }
        ModelParams::Mlp(mlp) => {
            let dims: Vec<String> = mlp.weights.iter().map(|w| w.rows().to_string()).collect();
            println!("layer widths: {}", dims.join(" -> "));
        }
    }
    println!("seed: {}", model.metadata.seed);
    println!(
        "extractor: side={} canny=({}, {}) glcm_levels={} hash={}",
        model.extractor.resize_side,
        model.extractor.canny_low,
        model.extractor.canny_high,
        model.extractor.glcm_levels,
        model.metadata.extractor_config_hash
    );
    Ok(())
}
