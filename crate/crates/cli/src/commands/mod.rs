//! Subcommand implementations and the plumbing they share.

pub mod evaluate;
pub mod extract;
pub mod info;
pub mod predict;
pub mod rfe;
pub mod train;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Args;

use artdetect_core::features::ExtractorConfig;
use artdetect_core::models::{GammaSpec, KernelSpec, LRConfig, SVMConfig};
use artdetect_core::neural::{Activation, MLPConfig};
use artdetect_core::select::{CellStatus, FamilyConfig, GridResult, ModelFamily};

use crate::config::FileConfig;
use crate::{CliError, CliResult};

/// Extractor flags shared by extract/evaluate/predict.
#[derive(Args, Debug, Clone)]
pub struct ExtractorArgs {
    /// Square resize side applied before feature extraction
    #[arg(long)]
    pub resize_side: Option<usize>,
    /// Canny low threshold on the 0-255 intensity scale
    #[arg(long)]
    pub canny_low: Option<f64>,
    /// Canny high threshold on the 0-255 intensity scale
    #[arg(long)]
    pub canny_high: Option<f64>,
    /// Gray levels for the co-occurrence matrix
    #[arg(long)]
    pub glcm_levels: Option<usize>,
}

impl ExtractorArgs {
    pub fn build(&self, cfg: &FileConfig) -> CliResult<ExtractorConfig> {
        let default = ExtractorConfig::default();
        Ok(ExtractorConfig {
            resize_side: cfg.resolve(self.resize_side, "resize-side", default.resize_side)?,
            canny_low: cfg.resolve(self.canny_low, "canny-low", default.canny_low)?,
            canny_high: cfg.resolve(self.canny_high, "canny-high", default.canny_high)?,
            glcm_levels: cfg.resolve(self.glcm_levels, "glcm-levels", default.glcm_levels)?,
        })
    }
}

/// Family hyperparameter flags shared by train/rfe.
#[derive(Args, Debug, Clone)]
pub struct FamilyArgs {
    /// LR inverse regularization weight
    #[arg(long)]
    pub lr_c: Option<f64>,
    /// LR iteration cap
    #[arg(long)]
    pub lr_max_iter: Option<usize>,
    /// LR gradient-norm stopping tolerance
    #[arg(long)]
    pub lr_tolerance: Option<f64>,

    /// SVM regularization weight
    #[arg(long)]
    pub svm_c: Option<f64>,
    /// SVM kernel: linear or rbf
    #[arg(long)]
    pub svm_kernel: Option<String>,
    /// SVM gamma: a number, 'scale', or 'auto'
    #[arg(long)]
    pub svm_gamma: Option<String>,
    /// SMO KKT tolerance
    #[arg(long)]
    pub svm_tolerance: Option<f64>,
    /// SMO iteration-cap multiplier
    #[arg(long)]
    pub svm_max_passes: Option<usize>,

    /// MLP hidden layer sizes, comma separated (e.g. 50,50)
    #[arg(long)]
    pub mlp_hidden: Option<String>,
    /// MLP activation: identity, logistic, or relu
    #[arg(long)]
    pub mlp_activation: Option<String>,
    /// MLP L2 penalty weight
    #[arg(long)]
    pub mlp_alpha: Option<f64>,
    /// MLP Adam learning rate
    #[arg(long)]
    pub mlp_learning_rate: Option<f64>,
    /// MLP training epochs
    #[arg(long)]
    pub mlp_max_iter: Option<usize>,
    /// MLP init/shuffle seed
    #[arg(long)]
    pub mlp_random_state: Option<u64>,
    /// MLP mini-batch size (0 = min(200, n))
    #[arg(long)]
    pub mlp_batch_size: Option<usize>,
}

impl FamilyArgs {
    pub fn build(&self, family: ModelFamily, cfg: &FileConfig) -> CliResult<FamilyConfig> {
        match family {
            ModelFamily::Lr => {
                let d = LRConfig::default();
                Ok(FamilyConfig::Lr(LRConfig {
                    c: cfg.resolve(self.lr_c, "lr-c", d.c)?,
                    max_iter: cfg.resolve(self.lr_max_iter, "lr-max-iter", d.max_iter)?,
                    tolerance: cfg.resolve(self.lr_tolerance, "lr-tolerance", d.tolerance)?,
                }))
            }
            ModelFamily::Svm => {
                let d = SVMConfig::default();
                let kernel = match cfg
                    .resolve(self.svm_kernel.clone(), "svm-kernel", "rbf".into())?
                    .as_str()
                {
                    "linear" => KernelSpec::Linear,
                    "rbf" => KernelSpec::Rbf,
                    other => {
                        return Err(CliError::Usage(format!("unknown kernel '{other}'")));
                    }
                };
                let gamma = match cfg
                    .resolve(self.svm_gamma.clone(), "svm-gamma", "scale".into())?
                    .as_str()
                {
                    "scale" => GammaSpec::Scale,
                    "auto" => GammaSpec::Auto,
                    number => GammaSpec::Value(number.parse::<f64>().map_err(|_| {
                        CliError::Usage(format!(
                            "gamma must be a number, 'scale', or 'auto', got '{number}'"
                        ))
                    })?),
                };
                Ok(FamilyConfig::Svm(SVMConfig {
                    c: cfg.resolve(self.svm_c, "svm-c", d.c)?,
                    kernel,
                    gamma,
                    tolerance: cfg.resolve(self.svm_tolerance, "svm-tolerance", d.tolerance)?,
                    max_passes: cfg.resolve(self.svm_max_passes, "svm-max-passes", d.max_passes)?,
                }))
            }
            ModelFamily::Mlp => {
                let d = MLPConfig::default();
                let hidden_raw =
                    cfg.resolve(self.mlp_hidden.clone(), "mlp-hidden", "100".into())?;
                let hidden: Vec<usize> = hidden_raw
                    .split(',')
                    .map(|p| p.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| {
                        CliError::Usage(format!("bad --mlp-hidden value '{hidden_raw}'"))
                    })?;
                let activation: Activation = cfg
                    .resolve(self.mlp_activation.clone(), "mlp-activation", "relu".into())?
                    .parse()
                    .map_err(|e: artdetect_core::Error| CliError::Usage(e.to_string()))?;
                Ok(FamilyConfig::Mlp(MLPConfig {
                    hidden_layer_sizes: hidden,
                    activation,
                    alpha: cfg.resolve(self.mlp_alpha, "mlp-alpha", d.alpha)?,
                    learning_rate_init: cfg.resolve(
                        self.mlp_learning_rate,
                        "mlp-learning-rate",
                        d.learning_rate_init,
                    )?,
                    max_iter: cfg.resolve(self.mlp_max_iter, "mlp-max-iter", d.max_iter)?,
                    random_state: cfg.resolve(
                        self.mlp_random_state,
                        "mlp-random-state",
                        d.random_state,
                    )?,
                    batch_size: cfg.resolve(self.mlp_batch_size, "mlp-batch-size", d.batch_size)?,
                }))
            }
        }
    }
}

/// A flag that may instead come from the config file; absent in both is
/// a usage error naming the flag.
pub fn required<T: std::str::FromStr>(
    cfg: &FileConfig,
    flag: Option<T>,
    key: &str,
) -> CliResult<T> {
    cfg.resolve_opt(flag, key)?
        .ok_or_else(|| CliError::Usage(format!("missing --{key} (or config key '{key}')")))
}

/// reports/TIMESTAMP (unix seconds) unless overridden.
pub fn resolve_report_dir(flag: Option<PathBuf>, cfg: &FileConfig) -> CliResult<PathBuf> {
    if let Some(dir) = cfg.resolve_opt(flag, "report-dir")? {
        return Ok(dir);
    }
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(PathBuf::from("reports").join(stamp.to_string()))
}

/// Grid results table: one row per cell with per-fold accuracies, mean,
/// and status.
pub fn grid_results_csv(result: &GridResult, k: usize) -> String {
    let mut csv = String::from("cell,params");
    for fold in 0..k {
        let _ = write!(csv, ",fold_{fold}");
    }
    csv.push_str(",mean_accuracy,status\n");
    for cell in &result.cells {
        let params: Vec<String> = cell
            .params
            .iter()
            .map(|(n, v)| format!("{n}={v}"))
            .collect();
        let _ = write!(csv, "{},\"{}\"", cell.index, params.join(" "));
        match &cell.status {
            CellStatus::Evaluated {
                fold_accuracies,
                mean_accuracy,
            } => {
                for acc in fold_accuracies {
                    let _ = write!(csv, ",{acc}");
                }
                let _ = writeln!(csv, ",{mean_accuracy},ok");
            }
            CellStatus::Skipped { reason } => {
                for _ in 0..k {
                    csv.push(',');
                }
                let _ = writeln!(csv, ",,skipped: {reason}");
            }
            CellStatus::Failed { error } => {
                for _ in 0..k {
                    csv.push(',');
                }
                let _ = writeln!(csv, ",,failed: {error}");
            }
        }
    }
    csv
}
