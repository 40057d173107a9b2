//! From-scratch classifiers trained on standardized feature vectors.

mod logreg;
mod svm;

pub use logreg::{lr_objective, predict_lr, train_lr, train_lr_traced, LRConfig, LRModel};
pub use svm::{
    dual_objective, predict_svm, resolve_gamma, smo, train_svm, BinarySvm, GammaSpec, Kernel,
    KernelSpec, SVMConfig, SVMModel, SmoSolution,
};
