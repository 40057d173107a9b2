//! Exhaustive grid search with stratified cross-validation, and recursive
//! feature elimination producing accuracy-versus-feature-count curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{kfold, FeatureTable};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::models::{
    predict_lr, predict_svm, train_lr, train_svm, GammaSpec, KernelSpec, LRConfig, LRModel,
    SVMConfig, SVMModel,
};
use crate::neural::{predict_mlp, train_mlp, Activation, MLPConfig, MLPModel};
use crate::preprocess::Scaler;
use crate::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Lr,
    Svm,
    Mlp,
}

impl ModelFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelFamily::Lr => "lr",
            ModelFamily::Svm => "svm",
            ModelFamily::Mlp => "mlp",
        }
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lr" => Ok(ModelFamily::Lr),
            "svm" => Ok(ModelFamily::Svm),
            "mlp" => Ok(ModelFamily::Mlp),
            other => Err(Error::InvalidInput(format!(
                "unknown model family '{other}'"
            ))),
        }
    }
}

/// One hyperparameter setting for a feature-vector model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FamilyConfig {
    Lr(LRConfig),
    Svm(SVMConfig),
    Mlp(MLPConfig),
}

impl FamilyConfig {
    pub fn family(&self) -> ModelFamily {
        match self {
            FamilyConfig::Lr(_) => ModelFamily::Lr,
            FamilyConfig::Svm(_) => ModelFamily::Svm,
            FamilyConfig::Mlp(_) => ModelFamily::Mlp,
        }
    }

    pub fn render(&self) -> String {
        match self {
            FamilyConfig::Lr(c) => format!(
                "lr c={} max_iter={} tolerance={}",
                c.c, c.max_iter, c.tolerance
            ),
            FamilyConfig::Svm(c) => {
                let kernel = match c.kernel {
                    KernelSpec::Linear => "linear",
                    KernelSpec::Rbf => "rbf",
                };
                let gamma = match c.gamma {
                    GammaSpec::Value(v) => format!("{v}"),
                    GammaSpec::Scale => "scale".into(),
                    GammaSpec::Auto => "auto".into(),
                };
                format!("svm c={} kernel={kernel} gamma={gamma}", c.c)
            }
            FamilyConfig::Mlp(c) => {
                let hidden: Vec<String> =
                    c.hidden_layer_sizes.iter().map(|h| h.to_string()).collect();
                let act = match c.activation {
                    Activation::Identity => "identity",
                    Activation::Logistic => "logistic",
                    Activation::Relu => "relu",
                };
                format!(
                    "mlp hidden=({}) activation={act} alpha={} random_state={} learning_rate_init={} max_iter={}",
                    hidden.join(","),
                    c.alpha,
                    c.random_state,
                    c.learning_rate_init,
                    c.max_iter
                )
            }
        }
    }
}

/// A feature-vector model of any family, plus a uniform predict surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureModel {
    Lr(LRModel),
    Svm(SVMModel),
    Mlp(MLPModel),
}

impl FeatureModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        match self {
            FeatureModel::Lr(m) => Ok(predict_lr(m, x)?.0),
            FeatureModel::Svm(m) => predict_svm(m, x),
            FeatureModel::Mlp(m) => Ok(predict_mlp(m, x)?.0),
        }
    }

    /// Score of the predicted label per row: probability for LR/MLP,
    /// decision value (binary) or vote share (multiclass) for SVM.
    pub fn predict_scored(&self, x: &Matrix) -> Result<Vec<(usize, f64)>> {
        match self {
            FeatureModel::Lr(m) => {
                let (labels, probs) = predict_lr(m, x)?;
                Ok(labels
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| (l, probs.get(i, l)))
                    .collect())
            }
            FeatureModel::Mlp(m) => {
                let (labels, probs) = predict_mlp(m, x)?;
                Ok(labels
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| (l, probs.get(i, l)))
                    .collect())
            }
            FeatureModel::Svm(m) => {
                let labels = predict_svm(m, x)?;
                Ok(labels
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| {
                        let score = if m.n_classes == 2 && m.machines.len() == 1 {
                            m.binary_decision(x.row(i))
                        } else {
                            let mut votes = vec![0usize; m.n_classes];
                            for machine in &m.machines {
                                let f = machine.svm.decision(&m.kernel, x.row(i));
                                if f > 0.0 {
                                    votes[machine.pos] += 1;
                                } else {
                                    votes[machine.neg] += 1;
                                }
                            }
                            votes[l] as f64 / m.machines.len().max(1) as f64
                        };
                        (l, score)
                    })
                    .collect())
            }
        }
    }
}

pub fn train_family(
    cfg: &FamilyConfig,
    x: &Matrix,
    y: &[usize],
    task: Task,
) -> Result<FeatureModel> {
    match cfg {
        FamilyConfig::Lr(c) => Ok(FeatureModel::Lr(train_lr(x, y, c, task)?)),
        FamilyConfig::Svm(c) => Ok(FeatureModel::Svm(train_svm(x, y, c, task)?)),
        FamilyConfig::Mlp(c) => Ok(FeatureModel::Mlp(train_mlp(x, y, c)?)),
    }
}

/// One hyperparameter axis value.
#[derive(Debug, Clone, PartialEq)]
pub enum GridValue {
    Float(f64),
    Int(i64),
    Token(&'static str),
    IntList(Vec<usize>),
}

impl GridValue {
    fn render(&self) -> String {
        match self {
            GridValue::Float(v) => format!("{v}"),
            GridValue::Int(v) => format!("{v}"),
            GridValue::Token(t) => t.to_string(),
            GridValue::IntList(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
                format!("({})", parts.join(","))
            }
        }
    }
}

/// Hyperparameter surface: named axes in a fixed order; cells are the
/// cartesian product enumerated row-major (last axis fastest).
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub family: ModelFamily,
    pub axes: Vec<(&'static str, Vec<GridValue>)>,
}

impl GridSpec {
    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|(_, vs)| vs.len()).product()
    }

    fn cell(&self, index: usize) -> Vec<(&'static str, GridValue)> {
        let mut remainder = index;
        let mut picks = vec![None; self.axes.len()];
        for (axis_idx, (_, values)) in self.axes.iter().enumerate().rev() {
            picks[axis_idx] = Some(remainder % values.len());
            remainder /= values.len();
        }
        self.axes
            .iter()
            .zip(picks)
            .map(|((name, values), pick)| (*name, values[pick.unwrap()].clone()))
            .collect()
    }
}

/// The published LR hyperparameter surface: 6 C values, 3 solvers, 2
/// penalties, 7 iteration caps. The `elastincnet` penalty cells are
/// enumerated but skipped, and the solver axis is provenance only (one
/// deterministic optimizer serves every cell).
pub fn table3_lr_grid() -> GridSpec {
    GridSpec {
        family: ModelFamily::Lr,
        axes: vec![
            (
                "c",
                vec![
                    GridValue::Float(0.2),
                    GridValue::Float(0.3),
                    GridValue::Float(0.5),
                    GridValue::Float(0.7),
                    GridValue::Float(0.8),
                    GridValue::Float(1.0),
                ],
            ),
            (
                "solver",
                vec![
                    GridValue::Token("lbfgs"),
                    GridValue::Token("saga"),
                    GridValue::Token("liblinear"),
                ],
            ),
            (
                "penalty",
                vec![GridValue::Token("l2"), GridValue::Token("elastincnet")],
            ),
            (
                "max_iter",
                vec![
                    GridValue::Int(50),
                    GridValue::Int(80),
                    GridValue::Int(100),
                    GridValue::Int(120),
                    GridValue::Int(200),
                    GridValue::Int(500),
                    GridValue::Int(1000),
                ],
            ),
        ],
    }
}

/// The published SVM surface: 3 C values x 5 gammas x 2 kernels = 30 cells.
pub fn table4_svm_grid() -> GridSpec {
    GridSpec {
        family: ModelFamily::Svm,
        axes: vec![
            (
                "c",
                vec![
                    GridValue::Float(0.1),
                    GridValue::Float(1.0),
                    GridValue::Float(10.0),
                ],
            ),
            (
                "gamma",
                vec![
                    GridValue::Float(0.1),
                    GridValue::Float(1.0),
                    GridValue::Float(10.0),
                    GridValue::Token("scale"),
                    GridValue::Token("auto"),
                ],
            ),
            (
                "kernel",
                vec![GridValue::Token("linear"), GridValue::Token("rbf")],
            ),
        ],
    }
}

/// The published MLP surface: 3 layouts x 3 activations x 2 alphas x 3
/// seeds x adam x 1 learning rate x 3 epoch caps = 162 cells.
pub fn table5_mlp_grid() -> GridSpec {
    GridSpec {
        family: ModelFamily::Mlp,
        axes: vec![
            (
                "hidden_layer_sizes",
                vec![
                    GridValue::IntList(vec![50]),
                    GridValue::IntList(vec![100]),
                    GridValue::IntList(vec![50, 50]),
                ],
            ),
            (
                "activation",
                vec![
                    GridValue::Token("identity"),
                    GridValue::Token("logistic"),
                    GridValue::Token("relu"),
                ],
            ),
            (
                "alpha",
                vec![GridValue::Float(0.0001), GridValue::Float(0.05)],
            ),
            (
                "random_state",
                vec![GridValue::Int(30), GridValue::Int(40), GridValue::Int(50)],
            ),
            ("solver", vec![GridValue::Token("adam")]),
            ("learning_rate_init", vec![GridValue::Float(0.0001)]),
            (
                "max_iter",
                vec![
                    GridValue::Int(200),
                    GridValue::Int(300),
                    GridValue::Int(1000),
                ],
            ),
        ],
    }
}

/// Materializes one grid cell into a trainable config, or a skip reason.
fn materialize(
    family: ModelFamily,
    params: &[(&'static str, GridValue)],
) -> std::result::Result<FamilyConfig, String> {
    let get = |name: &str| params.iter().find(|(n, _)| *n == name).map(|(_, v)| v);
    match family {
        ModelFamily::Lr => {
            if let Some(GridValue::Token(p)) = get("penalty") {
                if *p != "l2" {
                    return Err(format!("penalty '{p}' unsupported; cell skipped"));
                }
            }
            let mut cfg = LRConfig::default();
            if let Some(GridValue::Float(c)) = get("c") {
                cfg.c = *c;
            }
            if let Some(GridValue::Int(m)) = get("max_iter") {
                cfg.max_iter = *m as usize;
            }
            Ok(FamilyConfig::Lr(cfg))
        }
        ModelFamily::Svm => {
            let mut cfg = SVMConfig::default();
            if let Some(GridValue::Float(c)) = get("c") {
                cfg.c = *c;
            }
            match get("gamma") {
                Some(GridValue::Float(g)) => cfg.gamma = GammaSpec::Value(*g),
                Some(GridValue::Token("scale")) => cfg.gamma = GammaSpec::Scale,
                Some(GridValue::Token("auto")) => cfg.gamma = GammaSpec::Auto,
                _ => {}
            }
            match get("kernel") {
                Some(GridValue::Token("linear")) => cfg.kernel = KernelSpec::Linear,
                Some(GridValue::Token("rbf")) => cfg.kernel = KernelSpec::Rbf,
                _ => {}
            }
            Ok(FamilyConfig::Svm(cfg))
        }
        ModelFamily::Mlp => {
            let mut cfg = MLPConfig::default();
            if let Some(GridValue::IntList(h)) = get("hidden_layer_sizes") {
                cfg.hidden_layer_sizes = h.clone();
            }
            match get("activation") {
                Some(GridValue::Token("identity")) => cfg.activation = Activation::Identity,
                Some(GridValue::Token("logistic")) => cfg.activation = Activation::Logistic,
                Some(GridValue::Token("relu")) => cfg.activation = Activation::Relu,
                _ => {}
            }
            if let Some(GridValue::Float(a)) = get("alpha") {
                cfg.alpha = *a;
            }
            if let Some(GridValue::Int(r)) = get("random_state") {
                cfg.random_state = *r as u64;
            }
            if let Some(GridValue::Float(lr)) = get("learning_rate_init") {
                cfg.learning_rate_init = *lr;
            }
            if let Some(GridValue::Int(m)) = get("max_iter") {
                cfg.max_iter = *m as usize;
            }
            Ok(FamilyConfig::Mlp(cfg))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Evaluated {
        fold_accuracies: Vec<f64>,
        mean_accuracy: f64,
    },
    Skipped {
        reason: String,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub index: usize,
    pub params: Vec<(String, String)>,
    pub status: CellStatus,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    pub best_index: usize,
    pub best_config: FamilyConfig,
    pub best_mean_accuracy: f64,
}

/// Trains one configuration on one already-projected feature matrix pair.
fn fit_and_score(
    cfg: &FamilyConfig,
    x_train: &Matrix,
    y_train: &[usize],
    x_test: &Matrix,
    y_test: &[usize],
    task: Task,
) -> Result<f64> {
    let scaler = Scaler::fit(x_train)?;
    let xt = scaler.transform(x_train)?;
    let xv = scaler.transform(x_test)?;
    let model = train_family(cfg, &xt, y_train, task)?;
    let predictions = model.predict(&xv)?;
    crate::eval::accuracy(y_test, &predictions)
}

/// Mean accuracy over k stratified folds for one configuration restricted
/// to `feature_cols`. The scaler is re-fit on each fold's training part.
pub fn evaluate_cv(
    cfg: &FamilyConfig,
    table: &FeatureTable,
    feature_cols: &[usize],
    task: Task,
    k: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    let folds = kfold(table, k, seed)?;
    let labels = table.labels(task);
    let projected = table.features.select_cols(feature_cols);
    let mut fold_accuracies = Vec::with_capacity(k);
    for fold in &folds {
        debug_assert!(fold.train.iter().all(|i| !fold.test.contains(i)));
        let x_train = projected.select_rows(&fold.train);
        let y_train: Vec<usize> = fold.train.iter().map(|&i| labels[i]).collect();
        let x_test = projected.select_rows(&fold.test);
        let y_test: Vec<usize> = fold.test.iter().map(|&i| labels[i]).collect();
        fold_accuracies.push(fit_and_score(
            cfg, &x_train, &y_train, &x_test, &y_test, task,
        )?);
    }
    let mean = fold_accuracies.iter().sum::<f64>() / k as f64;
    Ok((mean, fold_accuracies))
}

/// Evaluates every cell of the grid by k-fold cross-validation. Training
/// failures are recorded per cell, never fatal. The best cell is the
/// highest mean accuracy; ties resolve to the earliest cell in row-major
/// axis order.
pub fn grid_search(
    spec: &GridSpec,
    table: &FeatureTable,
    task: Task,
    k: usize,
    seed: u64,
) -> Result<GridResult> {
    let total = spec.cell_count();
    if total == 0 {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let all_cols: Vec<usize> = (0..table.n_features()).collect();
    let cells: Vec<GridCell> = (0..total)
        .into_par_iter()
        .map(|index| {
            let raw = spec.cell(index);
            let params: Vec<(String, String)> = raw
                .iter()
                .map(|(n, v)| (n.to_string(), v.render()))
                .collect();
            let status = match materialize(spec.family, &raw) {
                Err(reason) => CellStatus::Skipped { reason },
                Ok(cfg) => match evaluate_cv(&cfg, table, &all_cols, task, k, seed) {
                    Ok((mean_accuracy, fold_accuracies)) => CellStatus::Evaluated {
                        fold_accuracies,
                        mean_accuracy,
                    },
                    Err(e) => CellStatus::Failed {
                        error: e.to_string(),
                    },
                },
            };
            GridCell {
                index,
                params,
                status,
            }
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for cell in &cells {
        if let CellStatus::Evaluated { mean_accuracy, .. } = cell.status {
            let better = match best {
                None => true,
                Some((_, acc)) => mean_accuracy > acc,
            };
            if better {
                best = Some((cell.index, mean_accuracy));
            }
        }
    }
    let (best_index, best_mean_accuracy) =
        best.ok_or_else(|| Error::InvalidInput("no grid cell could be evaluated".into()))?;
    let best_config =
        materialize(spec.family, &spec.cell(best_index)).expect("best cell must be materializable");
    Ok(GridResult {
        cells,
        best_index,
        best_config,
        best_mean_accuracy,
    })
}

/// One point of the elimination curve: the accuracy of `kept_features`
/// and the feature dropped to move to the next point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RFEPoint {
    pub feature_count: usize,
    pub kept_features: Vec<String>,
    pub cv_accuracy: f64,
    pub dropped_feature: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RFECurve {
    pub points: Vec<RFEPoint>,
}

impl RFECurve {
    /// Best point by CV accuracy; ties go to the earlier point (more
    /// features).
    pub fn best(&self) -> &RFEPoint {
        let mut best = &self.points[0];
        for p in &self.points {
            if p.cv_accuracy > best.cv_accuracy {
                best = p;
            }
        }
        best
    }
}

const SURROGATE_LR: LRConfig = LRConfig {
    c: 1.0,
    max_iter: 200,
    tolerance: 1e-6,
};

/// Mean |weight| of an L2 logistic surrogate across folds, per feature.
/// One ranker serves every model family so curves stay comparable.
fn surrogate_importance(
    table: &FeatureTable,
    cols: &[usize],
    task: Task,
    k: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let folds = kfold(table, k, seed)?;
    let labels = table.labels(task);
    let projected = table.features.select_cols(cols);
    let mut importance = vec![0.0; cols.len()];
    for fold in &folds {
        let x_train = projected.select_rows(&fold.train);
        let y_train: Vec<usize> = fold.train.iter().map(|&i| labels[i]).collect();
        let scaler = Scaler::fit(&x_train)?;
        let xt = scaler.transform(&x_train)?;
        let model = train_lr(&xt, &y_train, &SURROGATE_LR, task)?;
        for (j, slot) in importance.iter_mut().enumerate() {
            let mut acc = 0.0;
            for cls in 0..model.weights.rows() {
                acc += model.weights.get(cls, j).abs();
            }
            *slot += acc / model.weights.rows() as f64;
        }
    }
    for v in &mut importance {
        *v /= k as f64;
    }
    Ok(importance)
}

/// Recursive feature elimination: evaluate the current set by k-fold CV,
/// drop the feature the surrogate ranks lowest, repeat down to one
/// feature. The point at the full width equals a plain CV evaluation of
/// the same config and seed.
pub fn rfe(
    cfg: &FamilyConfig,
    table: &FeatureTable,
    task: Task,
    k: usize,
    seed: u64,
) -> Result<RFECurve> {
    let mut cols: Vec<usize> = (0..table.n_features()).collect();
    let mut points = Vec::with_capacity(cols.len());
    while !cols.is_empty() {
        let feature_count = cols.len();
        let kept_features: Vec<String> = cols
            .iter()
            .map(|&c| table.feature_names[c].clone())
            .collect();
        let (cv_accuracy, _) = evaluate_cv(cfg, table, &cols, task, k, seed)?;
        let dropped = if feature_count > 1 {
            let importance = surrogate_importance(table, &cols, task, k, seed)?;
            let mut worst = 0;
            for (j, &v) in importance.iter().enumerate() {
                if v < importance[worst] {
                    worst = j;
                }
            }
            Some(cols.remove(worst))
        } else {
            cols.clear();
            None
        };
        points.push(RFEPoint {
            feature_count,
            kept_features,
            cv_accuracy,
            dropped_feature: dropped.map(|c| table.feature_names[c].clone()),
        });
    }
    Ok(RFECurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::is_ai_class;
    use crate::features::FEATURE_NAMES;
    use crate::rng::Rng;

    fn synthetic_table(n_per_class: usize, seed: u64) -> FeatureTable {
        // labels depend on the sum of the first 3 features; the rest is noise
        let mut rng = Rng::new(seed);
        let mut rows = Vec::new();
        let mut class_labels = Vec::new();
        let mut binary_labels = Vec::new();
        let mut paths = Vec::new();
        let class_names = vec!["AI-x".to_string(), "Human-y".to_string()];
        let mut counts = [0usize; 2];
        while counts[0] < n_per_class || counts[1] < n_per_class {
            let row: Vec<f64> = (0..39).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let label = usize::from(row[0] + row[1] + row[2] > 0.0);
            if counts[label] >= n_per_class {
                continue;
            }
            counts[label] += 1;
            paths.push(format!("{}/{}.png", class_names[label], counts[label]));
            rows.push(row);
            class_labels.push(label);
            binary_labels.push(u8::from(is_ai_class(&class_names[label])));
        }
        FeatureTable {
            features: Matrix::from_rows(&rows).unwrap(),
            class_labels,
            binary_labels,
            paths,
            class_names,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn preset_grid_cell_counts() {
        assert_eq!(table3_lr_grid().cell_count(), 252);
        assert_eq!(table4_svm_grid().cell_count(), 30);
        assert_eq!(table5_mlp_grid().cell_count(), 162);
    }

    #[test]
    fn lr_grid_skips_every_elastincnet_cell() {
        let spec = table3_lr_grid();
        let mut skipped = 0;
        for index in 0..spec.cell_count() {
            let cell = spec.cell(index);
            if materialize(spec.family, &cell).is_err() {
                skipped += 1;
            }
        }
        assert_eq!(skipped, 126);
    }

    #[test]
    fn single_cell_grid_returns_it() {
        let spec = GridSpec {
            family: ModelFamily::Lr,
            axes: vec![("c", vec![GridValue::Float(1.0)])],
        };
        let table = synthetic_table(20, 3);
        let result = grid_search(&spec, &table, Task::Binary, 2, 7).unwrap();
        assert_eq!(result.cells.len(), 1);
        assert_eq!(result.best_index, 0);
    }

    #[test]
    fn duplicate_configs_tie_to_first() {
        let spec = GridSpec {
            family: ModelFamily::Lr,
            axes: vec![("c", vec![GridValue::Float(1.0), GridValue::Float(1.0)])],
        };
        let table = synthetic_table(20, 3);
        let result = grid_search(&spec, &table, Task::Binary, 2, 7).unwrap();
        let accs: Vec<f64> = result
            .cells
            .iter()
            .map(|c| match &c.status {
                CellStatus::Evaluated { mean_accuracy, .. } => *mean_accuracy,
                other => panic!("unexpected status {other:?}"),
            })
            .collect();
        assert_eq!(accs[0], accs[1]);
        assert_eq!(result.best_index, 0);
    }

    #[test]
    fn grid_search_deterministic() {
        let spec = GridSpec {
            family: ModelFamily::Lr,
            axes: vec![("c", vec![GridValue::Float(0.5), GridValue::Float(1.0)])],
        };
        let table = synthetic_table(25, 5);
        let a = grid_search(&spec, &table, Task::Binary, 3, 11).unwrap();
        let b = grid_search(&spec, &table, Task::Binary, 3, 11).unwrap();
        assert_eq!(a.cells, b.cells);
        assert_eq!(a.best_index, b.best_index);
    }

    #[test]
    fn rfe_curve_shape_and_consistency() {
        let table = synthetic_table(30, 9);
        let cfg = FamilyConfig::Lr(LRConfig::default());
        let curve = rfe(&cfg, &table, Task::Binary, 3, 13).unwrap();
        assert_eq!(curve.points.len(), 39);
        for (i, p) in curve.points.iter().enumerate() {
            assert_eq!(p.feature_count, 39 - i);
            assert_eq!(p.kept_features.len(), p.feature_count);
        }
        // point at 39 features equals the plain CV accuracy of the config
        let (full_cv, _) = evaluate_cv(
            &cfg,
            &table,
            &(0..39).collect::<Vec<_>>(),
            Task::Binary,
            3,
            13,
        )
        .unwrap();
        assert!((curve.points[0].cv_accuracy - full_cv).abs() < 1e-12);
    }

    #[test]
    fn rfe_keeps_informative_features() {
        let table = synthetic_table(60, 21);
        let cfg = FamilyConfig::Lr(LRConfig::default());
        let curve = rfe(&cfg, &table, Task::Binary, 3, 2).unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!(last.feature_count, 1);
        let three = &curve.points[36];
        assert_eq!(three.feature_count, 3);
        // informative features occupy canonical positions 0..3
        let informative: Vec<&str> = FEATURE_NAMES[0..3].to_vec();
        for name in informative {
            assert!(
                three.kept_features.iter().any(|k| k == name),
                "lost informative feature {name}: {:?}",
                three.kept_features
            );
        }
    }

    #[test]
    fn rfe_reproducible() {
        let table = synthetic_table(25, 2);
        let cfg = FamilyConfig::Lr(LRConfig::default());
        let a = rfe(&cfg, &table, Task::Binary, 2, 5).unwrap();
        let b = rfe(&cfg, &table, Task::Binary, 2, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn accuracy_uses_exactly_the_kept_columns() {
        let table = synthetic_table(20, 44);
        let cfg = FamilyConfig::Lr(LRConfig::default());
        let cols = vec![0usize, 5, 9];
        // models trained through evaluate_cv on 3 columns must reject
        // 39-wide inputs; verified indirectly through the projection width
        let projected = table.features.select_cols(&cols);
        assert_eq!(projected.cols(), 3);
        let (acc, folds) = evaluate_cv(&cfg, &table, &cols, Task::Binary, 2, 3).unwrap();
        assert_eq!(folds.len(), 2);
        assert!((0.0..=1.0).contains(&acc));
    }
}
