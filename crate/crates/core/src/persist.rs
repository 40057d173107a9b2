//! Versioned, self-describing text model format. JSON with full-precision
//! floats, so a saved model reloads to bit-identical predictions and stays
//! diffable and portable.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_index, ExtractorConfig};
use crate::matrix::Matrix;
use crate::neural::CNNModel;
use crate::preprocess::Scaler;
use crate::select::FeatureModel;
use crate::Task;

pub const MODEL_FORMAT: &str = "artdetect-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelParams {
    Lr(crate::models::LRModel),
    Svm(crate::models::SVMModel),
    Mlp(crate::neural::MLPModel),
    Cnn(CNNModel),
}

impl ModelParams {
    pub fn family(&self) -> &'static str {
        match self {
            ModelParams::Lr(_) => "lr",
            ModelParams::Svm(_) => "svm",
            ModelParams::Mlp(_) => "mlp",
            ModelParams::Cnn(_) => "cnn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub seed: u64,
    pub extractor_config_hash: String,
    pub created_by: String,
}

/// The on-disk envelope. Feature models carry the feature-name subset they
/// were trained on and the scaler fitted over those columns; the CNN
/// carries its input geometry instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub task: Task,
    pub class_names: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_names: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaler: Option<Scaler>,
    pub extractor: ExtractorConfig,
    pub params: ModelParams,
    pub metadata: ModelMetadata,
}

impl ModelFile {
    pub fn family(&self) -> &'static str {
        self.params.family()
    }

    /// Canonical column indices of the stored feature subset.
    pub fn feature_columns(&self) -> Result<Vec<usize>> {
        let names = self
            .feature_names
            .as_ref()
            .ok_or_else(|| Error::UnsupportedModelFile("model carries no feature names".into()))?;
        names
            .iter()
            .map(|n| {
                feature_index(n).ok_or_else(|| {
                    Error::UnsupportedModelFile(format!("unknown feature name '{n}'"))
                })
            })
            .collect()
    }

    /// Prediction path for feature models: project the canonical 39-wide
    /// matrix to the stored subset, standardize with the stored scaler,
    /// and run the classifier. Returns (label, score) per row.
    pub fn predict_features(&self, raw: &Matrix) -> Result<Vec<(usize, f64)>> {
        let model = match &self.params {
            ModelParams::Lr(m) => FeatureModel::Lr(m.clone()),
            ModelParams::Svm(m) => FeatureModel::Svm(m.clone()),
            ModelParams::Mlp(m) => FeatureModel::Mlp(m.clone()),
            ModelParams::Cnn(_) => {
                return Err(Error::UnsupportedModelFile(
                    "CNN models predict on images, not feature vectors".into(),
                ))
            }
        };
        let columns = self.feature_columns()?;
        let scaler = self
            .scaler
            .as_ref()
            .ok_or_else(|| Error::UnsupportedModelFile("model carries no scaler".into()))?;
        if raw.cols() != crate::features::FEATURE_COUNT {
            return Err(Error::Shape {
                expected: crate::features::FEATURE_COUNT,
                got: raw.cols(),
            });
        }
        let projected = raw.select_cols(&columns);
        let standardized = scaler.transform(&projected)?;
        model.predict_scored(&standardized)
    }
}

pub fn save_model(path: &Path, model: &ModelFile) -> Result<()> {
    let json = serde_json::to_string_pretty(model)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::UnsupportedModelFile(format!("{}: {e}", path.display())))?;
    match value.get("format").and_then(|f| f.as_str()) {
        Some(MODEL_FORMAT) => {}
        other => {
            return Err(Error::UnsupportedModelFile(format!(
                "{}: format marker {:?}",
                path.display(),
                other
            )))
        }
    }
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v as u32 <= MODEL_VERSION && v >= 1 => {}
        other => {
            return Err(Error::UnsupportedModelFile(format!(
                "{}: version {:?} not supported (current {MODEL_VERSION})",
                path.display(),
                other
            )))
        }
    }
    serde_json::from_value(value)
        .map_err(|e| Error::UnsupportedModelFile(format!("{}: {e}", path.display())))
}
