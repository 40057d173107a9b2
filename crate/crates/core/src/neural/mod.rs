//! From-scratch neural models: a multilayer perceptron and a small
//! convolutional network, both trained with Adam.

mod adam;
mod cnn;
mod mlp;
mod tensor;

pub use adam::Adam;
pub use cnn::{
    build_cnn, predict_cnn, train_cnn, Architecture, CNNConfig, CNNModel, EpochMetrics,
    FinalActivation, Layer,
};
pub use mlp::{predict_mlp, train_mlp, Activation, MLPConfig, MLPModel};
pub use tensor::Tensor;
