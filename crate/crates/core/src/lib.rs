//! Feature-based forensics for AI-generated artwork.
//!
//! This crate extracts 39 hand-crafted image features (brightness, RGB/HSV
//! color statistics, GLCM and LBP texture, HOG and edge shape, noise) and
//! trains from-scratch classifiers (logistic regression, SMO-trained SVM,
//! MLP, small CNN) to separate human-made from AI-generated art, both as a
//! binary problem and across six art classes.
//!
//! The pipeline pieces are deliberately independent: [`features`] turns a
//! decoded image into a fixed-order feature vector, [`dataset`] manages
//! directory-per-class ingestion and the CSV feature cache, [`preprocess`]
//! standardizes columns, [`models`] / [`neural`] train classifiers,
//! [`select`] runs grid search and recursive feature elimination, and
//! [`eval`] produces reports. [`persist`] defines the versioned text model
//! format shared with the CLI.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod imaging;
pub mod matrix;
pub mod models;
pub mod neural;
pub mod persist;
pub mod preprocess;
pub mod rng;
pub mod select;
pub mod stats;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Classification task: human-vs-AI or one of the six art classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Binary,
    Multiclass,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Binary => "binary",
            Task::Multiclass => "multiclass",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Task::Binary),
            "multiclass" => Ok(Task::Multiclass),
            other => Err(Error::InvalidInput(format!("unknown task '{other}'"))),
        }
    }
}
