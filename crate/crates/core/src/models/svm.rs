//! Soft-margin SVM trained by sequential minimal optimization with
//! deterministic pairwise working-set selection. Multiclass problems are
//! reduced one-vs-one with majority voting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf,
}

/// Gamma as configured: a number, or one of the derived tokens.
/// `scale` resolves to 1/(d * Var(X_train)), `auto` to 1/d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaSpec {
    Value(f64),
    Scale,
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SVMConfig {
    pub c: f64,
    pub kernel: KernelSpec,
    pub gamma: GammaSpec,
    pub tolerance: f64,
    pub max_passes: usize,
}

impl Default for SVMConfig {
    fn default() -> Self {
        SVMConfig {
            c: 1.0,
            kernel: KernelSpec::Rbf,
            gamma: GammaSpec::Scale,
            tolerance: 1e-3,
            max_passes: 10,
        }
    }
}

/// Kernel with gamma resolved against the training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// One trained binary machine: support vectors with their dual
/// coefficients alpha_i * y_i and the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_vectors: Matrix,
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
}

impl BinarySvm {
    pub fn decision(&self, kernel: &Kernel, x: &[f64]) -> f64 {
        let mut f = self.bias;
        for (i, coef) in self.dual_coefs.iter().enumerate() {
            f += coef * kernel.eval(self.support_vectors.row(i), x);
        }
        f
    }
}

/// One-vs-one machine for the class pair (neg, pos).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMachine {
    pub neg: usize,
    pub pos: usize,
    pub svm: BinarySvm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SVMModel {
    pub kernel: Kernel,
    pub machines: Vec<PairMachine>,
    pub n_classes: usize,
}

impl SVMModel {
    pub fn fully_converged(&self) -> bool {
        self.machines.iter().all(|m| m.svm.converged)
    }

    /// Decision value of the single binary machine.
    pub fn binary_decision(&self, x: &[f64]) -> f64 {
        self.machines[0].svm.decision(&self.kernel, x)
    }
}

/// Raw SMO solution over one binary subproblem, kept for optimality and
/// KKT checks.
#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
}

/// Sequential minimal optimization on the dual, deterministic pairwise
/// working-set selection: each iteration updates the maximal violating
/// pair (the steepest feasible ascent pair), ties broken by lowest index.
/// Terminates when the maximal KKT violation gap drops to `tolerance`;
/// `max_passes` scales the safety cap on pair updates, past which the
/// best iterate is returned with a warning.
pub fn smo(
    x: &Matrix,
    y: &[f64],
    kernel: &Kernel,
    c: f64,
    tolerance: f64,
    max_passes: usize,
) -> SmoSolution {
    let n = x.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(x.row(i), x.row(j));
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }

    // Dual variables for min (1/2) a'Qa - e'a, Q_ij = y_i y_j K_ij,
    // subject to y'a = 0 and 0 <= a <= C. gradient[i] = (Qa)_i - 1.
    let mut alphas = vec![0.0f64; n];
    let mut gradient = vec![-1.0f64; n];
    let in_up =
        |t: usize, alphas: &[f64]| (y[t] > 0.0 && alphas[t] < c) || (y[t] < 0.0 && alphas[t] > 0.0);
    let in_low =
        |t: usize, alphas: &[f64]| (y[t] > 0.0 && alphas[t] > 0.0) || (y[t] < 0.0 && alphas[t] < c);

    let cap = max_passes * (10 * n).max(1_000);
    let mut converged = false;
    let mut last_m = 0.0;
    let mut last_big_m = 0.0;
    for _iter in 0..cap {
        let mut m = f64::NEG_INFINITY;
        let mut big_m = f64::INFINITY;
        let mut i = usize::MAX;
        let mut j = usize::MAX;
        for t in 0..n {
            let v = -y[t] * gradient[t];
            if in_up(t, &alphas) && v > m {
                m = v;
                i = t;
            }
            if in_low(t, &alphas) && v < big_m {
                big_m = v;
                j = t;
            }
        }
        last_m = m;
        last_big_m = big_m;
        if i == usize::MAX || j == usize::MAX || m - big_m <= tolerance {
            converged = true;
            break;
        }

        let (old_i, old_j) = (alphas[i], alphas[j]);
        if y[i] != y[j] {
            let quad = (k.get(i, i) + k.get(j, j) - 2.0 * k.get(i, j)).max(1e-12);
            let delta = (-gradient[i] - gradient[j]) / quad;
            let diff = alphas[i] - alphas[j];
            alphas[i] += delta;
            alphas[j] += delta;
            if diff > 0.0 && alphas[j] < 0.0 {
                alphas[j] = 0.0;
                alphas[i] = diff;
            } else if diff <= 0.0 && alphas[i] < 0.0 {
                alphas[i] = 0.0;
                alphas[j] = -diff;
            }
            if diff > 0.0 && alphas[i] > c {
                alphas[i] = c;
                alphas[j] = c - diff;
            } else if diff <= 0.0 && alphas[j] > c {
                alphas[j] = c;
                alphas[i] = c + diff;
            }
        } else {
            let quad = (k.get(i, i) + k.get(j, j) - 2.0 * k.get(i, j)).max(1e-12);
            let delta = (gradient[i] - gradient[j]) / quad;
            let sum = alphas[i] + alphas[j];
            alphas[i] -= delta;
            alphas[j] += delta;
            if sum > c && alphas[i] > c {
                alphas[i] = c;
                alphas[j] = sum - c;
            } else if sum <= c && alphas[j] < 0.0 {
                alphas[j] = 0.0;
                alphas[i] = sum;
            }
            if sum > c && alphas[j] > c {
                alphas[j] = c;
                alphas[i] = sum - c;
            } else if sum <= c && alphas[i] < 0.0 {
                alphas[i] = 0.0;
                alphas[j] = sum;
            }
        }
        let (delta_i, delta_j) = (alphas[i] - old_i, alphas[j] - old_j);
        if delta_i == 0.0 && delta_j == 0.0 {
            // numerically pinned; treat as converged at current gap
            break;
        }
        for t in 0..n {
            gradient[t] += y[t] * (y[i] * delta_i * k.get(i, t) + y[j] * delta_j * k.get(j, t));
        }
    }
    if !converged {
        eprintln!("warning: SMO stopped before full KKT satisfaction; returning best iterate");
    }

    // bias from free support vectors, else the midpoint of the violation gap
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..n {
        if alphas[t] > 1e-12 && alphas[t] < c - 1e-12 {
            free_sum += -y[t] * gradient[t];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (last_m + last_big_m) / 2.0
    };
    SmoSolution {
        alphas,
        bias,
        converged,
    }
}

/// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
pub fn dual_objective(x: &Matrix, y: &[f64], kernel: &Kernel, alphas: &[f64]) -> f64 {
    let n = x.rows();
    let mut obj: f64 = alphas.iter().sum();
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alphas[j] == 0.0 {
                continue;
            }
            obj -= 0.5 * alphas[i] * alphas[j] * y[i] * y[j] * kernel.eval(x.row(i), x.row(j));
        }
    }
    obj
}

/// Resolves the configured gamma against the training matrix.
pub fn resolve_gamma(cfg: &SVMConfig, x: &Matrix) -> Result<Kernel> {
    match cfg.kernel {
        KernelSpec::Linear => Ok(Kernel::Linear),
        KernelSpec::Rbf => {
            let gamma = match cfg.gamma {
                GammaSpec::Value(v) => {
                    if v <= 0.0 {
                        return Err(Error::InvalidInput("gamma must be positive".into()));
                    }
                    v
                }
                GammaSpec::Auto => 1.0 / x.cols() as f64,
                GammaSpec::Scale => {
                    let data = x.data();
                    let n = data.len() as f64;
                    let mean = data.iter().sum::<f64>() / n;
                    let var = data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    // degenerate all-constant input: fall back to 1/d
                    if var <= 1e-12 {
                        1.0 / x.cols() as f64
                    } else {
                        1.0 / (x.cols() as f64 * var)
                    }
                }
            };
            Ok(Kernel::Rbf { gamma })
        }
    }
}

fn fit_binary(
    x: &Matrix,
    signs: &[f64],
    kernel: &Kernel,
    cfg: &SVMConfig,
) -> (BinarySvm, SmoSolution) {
    let solution = smo(x, signs, kernel, cfg.c, cfg.tolerance, cfg.max_passes);
    let kept: Vec<usize> = (0..x.rows())
        .filter(|&i| solution.alphas[i] > 1e-12)
        .collect();
    let support_vectors = x.select_rows(&kept);
    let dual_coefs = kept
        .iter()
        .map(|&i| solution.alphas[i] * signs[i])
        .collect();
    (
        BinarySvm {
            support_vectors,
            dual_coefs,
            bias: solution.bias,
            converged: solution.converged,
        },
        solution,
    )
}

/// Trains a binary machine or the one-vs-one set. `gamma scale` is
/// resolved once on the full training matrix.
pub fn train_svm(x: &Matrix, y: &[usize], cfg: &SVMConfig, task: Task) -> Result<SVMModel> {
    if cfg.c <= 0.0 {
        return Err(Error::InvalidInput("SVM c must be positive".into()));
    }
    if cfg.tolerance <= 0.0 {
        return Err(Error::InvalidInput("SVM tolerance must be positive".into()));
    }
    if cfg.max_passes == 0 {
        return Err(Error::InvalidInput(
            "SVM max_passes must be positive".into(),
        ));
    }
    if y.len() != x.rows() {
        return Err(Error::Shape {
            expected: x.rows(),
            got: y.len(),
        });
    }
    let kernel = resolve_gamma(cfg, x)?;
    let n_classes = match task {
        Task::Binary => 2,
        Task::Multiclass => y.iter().max().map_or(0, |&m| m + 1).max(2),
    };
    let mut machines = Vec::new();
    let mut distinct = vec![false; n_classes];
    for &label in y {
        if label >= n_classes {
            return Err(Error::Label(format!(
                "label {label} out of range for {n_classes} classes"
            )));
        }
        distinct[label] = true;
    }
    if distinct.iter().filter(|&&d| d).count() < 2 {
        return Err(Error::DegenerateLabels(
            "training labels contain a single class".into(),
        ));
    }

    for neg in 0..n_classes {
        for pos in neg + 1..n_classes {
            let rows: Vec<usize> = (0..x.rows())
                .filter(|&i| y[i] == neg || y[i] == pos)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let sub_x = x.select_rows(&rows);
            let signs: Vec<f64> = rows
                .iter()
                .map(|&i| if y[i] == pos { 1.0 } else { -1.0 })
                .collect();
            if signs.iter().all(|&s| s > 0.0) || signs.iter().all(|&s| s < 0.0) {
                continue;
            }
            let (svm, _) = fit_binary(&sub_x, &signs, &kernel, cfg);
            machines.push(PairMachine { neg, pos, svm });
        }
    }
    Ok(SVMModel {
        kernel,
        machines,
        n_classes,
    })
}

/// Sign of the decision function (binary) or one-vs-one majority vote
/// (multiclass); vote ties go to the lowest class index.
pub fn predict_svm(model: &SVMModel, x: &Matrix) -> Result<Vec<usize>> {
    let width = model.machines[0].svm.support_vectors.cols();
    if x.cols() != width {
        return Err(Error::Shape {
            expected: width,
            got: x.cols(),
        });
    }
    let mut labels = Vec::with_capacity(x.rows());
    for row in x.iter_rows() {
        let mut votes = vec![0usize; model.n_classes];
        for machine in &model.machines {
            let f = machine.svm.decision(&model.kernel, row);
            if f > 0.0 {
                votes[machine.pos] += 1;
            } else {
                votes[machine.neg] += 1;
            }
        }
        let mut best = 0;
        for (cls, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = cls;
            }
        }
        labels.push(best);
    }
    Ok(labels)
}
