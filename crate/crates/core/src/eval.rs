//! Accuracy, confusion matrices, and the experiment report files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::neural::EpochMetrics;
use crate::select::RFECurve;
use crate::Task;

/// Fraction of exact matches.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::InvalidInput("accuracy of empty sequences".into()));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// Counts with rows = true class, columns = predicted class, in the
/// provided label order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        self.counts.iter().enumerate().map(|(i, row)| row[i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    /// (precision, recall) for one class; degenerate denominators give 0.
    pub fn precision_recall(&self, class: usize) -> (f64, f64) {
        let k = self.labels.len();
        let tp = self.counts[class][class] as f64;
        let predicted: f64 = (0..k).map(|i| self.counts[i][class] as f64).sum();
        let actual: f64 = (0..k).map(|j| self.counts[class][j] as f64).sum();
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if actual > 0.0 { tp / actual } else { 0.0 };
        (precision, recall)
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize], labels: &[String]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    let k = labels.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= k || p >= k {
            return Err(Error::Label(format!(
                "label value {} not covered by the {} provided labels",
                t.max(p),
                k
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        labels: labels.to_vec(),
        counts,
    })
}

/// Everything one training run produces. `test_accuracy` is always derived
/// from the confusion matrix so the two can never disagree.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub task: Task,
    pub model_family: String,
    pub best_config: String,
    pub cv_mean_accuracy: f64,
    pub test_accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub rfe_curve: Option<RFECurve>,
    pub epochs: Option<Vec<EpochMetrics>>,
    pub seed: u64,
    pub extractor_config_hash: String,
}

impl ExperimentReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        task: Task,
        model_family: impl Into<String>,
        best_config: impl Into<String>,
        cv_mean_accuracy: f64,
        confusion: ConfusionMatrix,
        rfe_curve: Option<RFECurve>,
        epochs: Option<Vec<EpochMetrics>>,
        seed: u64,
        extractor_config_hash: impl Into<String>,
    ) -> Self {
        let test_accuracy = confusion.accuracy();
        ExperimentReport {
            task,
            model_family: model_family.into(),
            best_config: best_config.into(),
            cv_mean_accuracy,
            test_accuracy,
            confusion,
            rfe_curve,
            epochs,
            seed,
            extractor_config_hash: extractor_config_hash.into(),
        }
    }
}

/// Writes summary.txt, accuracy.csv, confusion.csv, and (when present)
/// rfe_curve.csv and epochs.csv into `dir`. Output depends only on the
/// report contents, so equal reports render byte-identically.
pub fn render_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, contents: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))
    };

    let mut summary = String::new();
    let _ = writeln!(summary, "task: {}", report.task.as_str());
    let _ = writeln!(summary, "model_family: {}", report.model_family);
    let _ = writeln!(summary, "best_config: {}", report.best_config);
    let _ = writeln!(summary, "cv_mean_accuracy: {}", report.cv_mean_accuracy);
    let _ = writeln!(summary, "test_accuracy: {}", report.test_accuracy);
    let _ = writeln!(summary, "seed: {}", report.seed);
    let _ = writeln!(
        summary,
        "extractor_config_hash: {}",
        report.extractor_config_hash
    );
    let _ = writeln!(summary);
    let _ = writeln!(
        summary,
        "confusion matrix (rows = true, columns = predicted):"
    );
    let width = report
        .confusion
        .labels
        .iter()
        .map(|l| l.len())
        .max()
        .unwrap_or(4)
        .max(6);
    let _ = write!(summary, "{:>width$}", "");
    for label in &report.confusion.labels {
        let _ = write!(summary, " {label:>width$}");
    }
    let _ = writeln!(summary);
    for (i, label) in report.confusion.labels.iter().enumerate() {
        let _ = write!(summary, "{label:>width$}");
        for &count in &report.confusion.counts[i] {
            let _ = write!(summary, " {count:>width$}");
        }
        let _ = writeln!(summary);
    }
    if let Some(curve) = &report.rfe_curve {
        let best = curve.best();
        let _ = writeln!(summary);
        let _ = writeln!(
            summary,
            "rfe: best cv accuracy {} at {} features",
            best.cv_accuracy, best.feature_count
        );
    }
    write("summary.txt", summary)?;

    let mut accuracy_csv =
        String::from("task,model_family,best_config,cv_mean_accuracy,test_accuracy");
    for label in &report.confusion.labels {
        let _ = write!(accuracy_csv, ",precision_{label},recall_{label}");
    }
    accuracy_csv.push('\n');
    let _ = write!(
        accuracy_csv,
        "{},{},\"{}\",{},{}",
        report.task.as_str(),
        report.model_family,
        report.best_config,
        report.cv_mean_accuracy,
        report.test_accuracy
    );
    for class in 0..report.confusion.labels.len() {
        let (p, r) = report.confusion.precision_recall(class);
        let _ = write!(accuracy_csv, ",{p},{r}");
    }
    accuracy_csv.push('\n');
    write("accuracy.csv", accuracy_csv)?;

    let mut confusion_csv = String::from("true_class");
    for label in &report.confusion.labels {
        let _ = write!(confusion_csv, ",{label}");
    }
    confusion_csv.push('\n');
    for (i, label) in report.confusion.labels.iter().enumerate() {
        let _ = write!(confusion_csv, "{label}");
        for &count in &report.confusion.counts[i] {
            let _ = write!(confusion_csv, ",{count}");
        }
        confusion_csv.push('\n');
    }
    write("confusion.csv", confusion_csv)?;

    if let Some(curve) = &report.rfe_curve {
        let mut csv = String::from("feature_count,cv_accuracy,dropped_feature\n");
        for p in &curve.points {
            let _ = writeln!(
                csv,
                "{},{},{}",
                p.feature_count,
                p.cv_accuracy,
                p.dropped_feature.as_deref().unwrap_or("")
            );
        }
        write("rfe_curve.csv", csv)?;
    }
    if let Some(epochs) = &report.epochs {
        let mut csv = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
        for e in epochs {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc
            );
        }
        write("epochs.csv", csv)?;
    }
    Ok(())
}

/// Writes one CSV per feature into `dir`: bin edges plus one count column
/// per class, over the feature's observed range. The raw data behind
/// per-feature class-distribution histograms.
pub fn write_feature_histograms(
    table: &crate::dataset::FeatureTable,
    dir: &Path,
    bin_count: usize,
) -> Result<()> {
    use crate::stats::build_histogram;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let k = table.n_classes();
    for (j, name) in table.feature_names.iter().enumerate() {
        let column: Vec<f64> = (0..table.n_rows())
            .map(|i| table.features.get(i, j))
            .collect();
        let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        };
        let per_class: Vec<_> = (0..k)
            .map(|c| {
                let values: Vec<f64> = (0..table.n_rows())
                    .filter(|&i| table.class_labels[i] == c)
                    .map(|i| table.features.get(i, j))
                    .collect();
                build_histogram(&values, bin_count, (lo, hi))
            })
            .collect();
        let mut csv = String::from("bin_low,bin_high");
        for class_name in &table.class_names {
            let _ = write!(csv, ",{class_name}");
        }
        csv.push('\n');
        let width = (hi - lo) / bin_count as f64;
        for b in 0..bin_count {
            let _ = write!(
                csv,
                "{},{}",
                lo + b as f64 * width,
                lo + (b + 1) as f64 * width
            );
            for h in &per_class {
                let _ = write!(csv, ",{}", h.counts[b]);
            }
            csv.push('\n');
        }
        let path = dir.join(format!("{name}.csv"));
        fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
