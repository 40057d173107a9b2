//! Minimal convolutional network trained directly on images. Two fixed
//! layer stacks are provided: an 11-layer binary classifier and a 9-layer
//! multiclass classifier, both 3x3 valid convolutions with 2x2 max
//! pooling, Adam, seeded dropout, and optional L2 weight penalties.

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::tensor::Tensor;
use crate::dataset::SplitIndex;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Binary11,
    Multiclass9,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinalActivation {
    Sigmoid,
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CNNConfig {
    pub input_side: usize,
    pub input_channels: usize,
    pub architecture: Architecture,
    pub dropout_rate: f64,
    pub l2_weight: f64,
    pub final_activation: FinalActivation,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub n_classes: usize,
}

impl Default for CNNConfig {
    fn default() -> Self {
        CNNConfig {
            input_side: 64,
            input_channels: 3,
            architecture: Architecture::Binary11,
            dropout_rate: 0.1,
            l2_weight: 0.0,
            final_activation: FinalActivation::Sigmoid,
            learning_rate: 0.001,
            epochs: 4,
            batch_size: 32,
            seed: 0,
            n_classes: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    /// [3, 3, c_in, c_out]
    pub kernels: Tensor,
    pub bias: Vec<f64>,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// out x in
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub l2: f64,
    pub relu: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Layer {
    Rescale(f64),
    Conv(ConvLayer),
    MaxPool(usize),
    Dropout(f64),
    Flatten,
    Dense(DenseLayer),
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Rescale(_) => "rescale",
            Layer::Conv(_) => "conv",
            Layer::MaxPool(_) => "maxpool",
            Layer::Dropout(_) => "dropout",
            Layer::Flatten => "flatten",
            Layer::Dense(_) => "dense",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CNNModel {
    pub layers: Vec<Layer>,
    pub input_side: usize,
    pub input_channels: usize,
    pub architecture: Architecture,
    pub final_activation: FinalActivation,
    pub n_classes: usize,
}

fn glorot_tensor(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut Rng) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut t = Tensor::zeros(shape);
    for v in &mut t.values {
        *v = rng.uniform(-limit, limit);
    }
    t
}

fn glorot_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = rng.uniform(-limit, limit);
    }
    m
}

/// Builds the configured layer stack with seeded Glorot-uniform weights.
/// Fails when the input side is too small to survive the conv/pool chain.
pub fn build_cnn(cfg: &CNNConfig) -> Result<CNNModel> {
    if !(0.0..1.0).contains(&cfg.dropout_rate) {
        return Err(Error::InvalidInput("dropout_rate must be in [0, 1)".into()));
    }
    let (conv_filters, head_units): (&[usize], usize) = match cfg.architecture {
        Architecture::Binary11 => (&[16, 32, 64], 1),
        Architecture::Multiclass9 => (&[16, 32], cfg.n_classes),
    };
    if cfg.architecture == Architecture::Binary11
        && cfg.final_activation == FinalActivation::Softmax
    {
        return Err(Error::InvalidInput(
            "softmax head requires the multiclass architecture".into(),
        ));
    }
    let conv_l2 = match cfg.architecture {
        Architecture::Binary11 => 0.0,
        Architecture::Multiclass9 => cfg.l2_weight,
    };

    let mut rng = Rng::new(cfg.seed);
    let mut layers = vec![Layer::Rescale(1.0 / 255.0)];
    let mut side = cfg.input_side;
    let mut channels = cfg.input_channels;
    for &filters in conv_filters {
        if side < 3 {
            return Err(Error::Shape {
                expected: 3,
                got: side,
            });
        }
        let fan_in = 9 * channels;
        let fan_out = 9 * filters;
        layers.push(Layer::Conv(ConvLayer {
            kernels: glorot_tensor(&[3, 3, channels, filters], fan_in, fan_out, &mut rng),
            bias: vec![0.0; filters],
            l2: conv_l2,
        }));
        side -= 2;
        layers.push(Layer::MaxPool(2));
        side /= 2;
        if side == 0 {
            return Err(Error::Shape {
                expected: 2,
                got: side,
            });
        }
        channels = filters;
    }
    layers.push(Layer::Dropout(cfg.dropout_rate));
    layers.push(Layer::Flatten);
    let flat = side * side * channels;
    layers.push(Layer::Dense(DenseLayer {
        weights: glorot_matrix(128, flat, &mut rng),
        bias: vec![0.0; 128],
        l2: match cfg.architecture {
            Architecture::Binary11 => 0.0,
            Architecture::Multiclass9 => cfg.l2_weight,
        },
        relu: true,
    }));
    layers.push(Layer::Dense(DenseLayer {
        weights: glorot_matrix(head_units, 128, &mut rng),
        bias: vec![0.0; head_units],
        l2: 0.0,
        relu: false,
    }));
    Ok(CNNModel {
        layers,
        input_side: cfg.input_side,
        input_channels: cfg.input_channels,
        architecture: cfg.architecture,
        final_activation: cfg.final_activation,
        n_classes: cfg.n_classes,
    })
}

/// Per-layer forward state kept for the backward pass.
enum Trace {
    Plain,
    Conv { input: Tensor, post: Tensor },
    Pool { argmax: Vec<usize>, in_len: usize },
    Dropout { mask: Option<Vec<f64>> },
    Dense { input: Vec<f64>, post: Vec<f64> },
}

struct Forward {
    logits: Vec<f64>,
    traces: Vec<Trace>,
}

impl CNNModel {
    fn check_input(&self, img: &Tensor) -> Result<()> {
        let want = [self.input_side, self.input_side, self.input_channels];
        if img.shape != want {
            return Err(Error::Shape {
                expected: want.iter().product(),
                got: img.len(),
            });
        }
        Ok(())
    }

    fn forward_sample(&self, img: &Tensor, rng: &mut Option<&mut Rng>) -> Forward {
        let mut shape = img.shape.clone();
        let mut values = img.values.clone();
        let mut traces = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            match layer {
                Layer::Rescale(s) => {
                    for v in &mut values {
                        *v *= s;
                    }
                    traces.push(Trace::Plain);
                }
                Layer::Conv(conv) => {
                    let input = Tensor::new(shape.clone(), values);
                    let (h, w, cin) = (shape[0], shape[1], shape[2]);
                    let cout = conv.bias.len();
                    let (oh, ow) = (h - 2, w - 2);
                    let mut out = vec![0.0; oh * ow * cout];
                    for y in 0..oh {
                        for x in 0..ow {
                            for o in 0..cout {
                                let mut acc = conv.bias[o];
                                for dy in 0..3 {
                                    for dx in 0..3 {
                                        let base = ((y + dy) * w + (x + dx)) * cin;
                                        let kbase = ((dy * 3 + dx) * cin) * cout + o;
                                        for ci in 0..cin {
                                            acc += input.values[base + ci]
                                                * conv.kernels.values[kbase + ci * cout];
                                        }
                                    }
                                }
                                out[(y * ow + x) * cout + o] = acc.max(0.0);
                            }
                        }
                    }
                    shape = vec![oh, ow, cout];
                    values = out;
                    traces.push(Trace::Conv {
                        input,
                        post: Tensor::new(shape.clone(), values.clone()),
                    });
                }
                Layer::MaxPool(k) => {
                    let (h, w, c) = (shape[0], shape[1], shape[2]);
                    let (oh, ow) = (h / k, w / k);
                    let mut out = vec![0.0; oh * ow * c];
                    let mut argmax = vec![0usize; oh * ow * c];
                    for y in 0..oh {
                        for x in 0..ow {
                            for ch in 0..c {
                                let mut best = f64::NEG_INFINITY;
                                let mut best_idx = 0;
                                for dy in 0..*k {
                                    for dx in 0..*k {
                                        let idx = ((y * k + dy) * w + (x * k + dx)) * c + ch;
                                        if values[idx] > best {
                                            best = values[idx];
                                            best_idx = idx;
                                        }
                                    }
                                }
                                out[(y * ow + x) * c + ch] = best;
                                argmax[(y * ow + x) * c + ch] = best_idx;
                            }
                        }
                    }
                    traces.push(Trace::Pool {
                        argmax,
                        in_len: values.len(),
                    });
                    shape = vec![oh, ow, c];
                    values = out;
                }
                Layer::Dropout(rate) => {
                    let mask = match rng {
                        Some(rng) if *rate > 0.0 => {
                            let keep = 1.0 - rate;
                            let mask: Vec<f64> = values
                                .iter()
                                .map(|_| {
                                    if rng.next_f64() < *rate {
                                        0.0
                                    } else {
                                        1.0 / keep
                                    }
                                })
                                .collect();
                            for (v, m) in values.iter_mut().zip(&mask) {
                                *v *= m;
                            }
                            Some(mask)
                        }
                        _ => None,
                    };
                    traces.push(Trace::Dropout { mask });
                }
                Layer::Flatten => {
                    shape = vec![values.len()];
                    traces.push(Trace::Plain);
                }
                Layer::Dense(dense) => {
                    let input = values;
                    let mut out = dense.bias.clone();
                    for (unit, acc) in out.iter_mut().enumerate() {
                        *acc += dense
                            .weights
                            .row(unit)
                            .iter()
                            .zip(&input)
                            .map(|(a, b)| a * b)
                            .sum::<f64>();
                        if dense.relu {
                            *acc = acc.max(0.0);
                        }
                    }
                    shape = vec![out.len()];
                    values = out.clone();
                    traces.push(Trace::Dense { input, post: out });
                }
            }
        }
        Forward {
            logits: values,
            traces,
        }
    }

    /// Head probabilities for a logit vector.
    fn head(&self, logits: &[f64]) -> Vec<f64> {
        match self.final_activation {
            FinalActivation::Sigmoid => logits.iter().map(|&z| sigmoid(z)).collect(),
            FinalActivation::Softmax => {
                let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
                let sum: f64 = exps.iter().sum();
                exps.iter().map(|&e| e / sum).collect()
            }
        }
    }

    /// Cross-entropy of one sample and the gradient at the logits.
    fn loss_and_dlogits(&self, logits: &[f64], label: usize) -> (f64, Vec<f64>) {
        if logits.len() == 1 {
            // binary head: sigmoid + binary cross-entropy
            let p = sigmoid(logits[0]).clamp(1e-12, 1.0 - 1e-12);
            let y = label as f64;
            let loss = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
            (loss, vec![p - y])
        } else {
            match self.final_activation {
                FinalActivation::Softmax => {
                    let p = self.head(logits);
                    let loss = -p[label].max(1e-300).ln();
                    let dlogits = p
                        .iter()
                        .enumerate()
                        .map(|(k, &pk)| pk - f64::from(k == label))
                        .collect();
                    (loss, dlogits)
                }
                FinalActivation::Sigmoid => {
                    // categorical cross-entropy over sigmoid outputs,
                    // normalized to a distribution inside the loss
                    let s: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
                    let total: f64 = s.iter().sum::<f64>().max(1e-300);
                    let p = (s[label] / total).clamp(1e-300, 1.0);
                    let loss = -p.ln();
                    let dlogits = s
                        .iter()
                        .enumerate()
                        .map(|(k, &sk)| {
                            let d_log_total = sk * (1.0 - sk) / total;
                            d_log_total - f64::from(k == label) * (1.0 - s[label])
                        })
                        .collect();
                    (loss, dlogits)
                }
            }
        }
    }

    fn backward_sample(&self, forward: &Forward, mut delta: Vec<f64>, grads: &mut [f64]) {
        let offsets = self.param_offsets();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let trace = &forward.traces[idx];
            match (layer, trace) {
                (Layer::Rescale(s), _) => {
                    for d in &mut delta {
                        *d *= s;
                    }
                }
                (Layer::Conv(conv), Trace::Conv { input, post }) => {
                    let (h, w, cin) = (input.shape[0], input.shape[1], input.shape[2]);
                    let cout = conv.bias.len();
                    let (oh, ow) = (h - 2, w - 2);
                    let (koff, boff) = offsets[idx];
                    let mut dinput = vec![0.0; input.len()];
                    for y in 0..oh {
                        for x in 0..ow {
                            for o in 0..cout {
                                let oi = (y * ow + x) * cout + o;
                                if post.values[oi] <= 0.0 {
                                    continue;
                                }
                                let d = delta[oi];
                                if d == 0.0 {
                                    continue;
                                }
                                grads[boff + o] += d;
                                for dy in 0..3 {
                                    for dx in 0..3 {
                                        let base = ((y + dy) * w + (x + dx)) * cin;
                                        let kbase = ((dy * 3 + dx) * cin) * cout + o;
                                        for ci in 0..cin {
                                            grads[koff + kbase + ci * cout] +=
                                                d * input.values[base + ci];
                                            dinput[base + ci] +=
                                                d * conv.kernels.values[kbase + ci * cout];
                                        }
                                    }
                                }
                            }
                        }
                    }
                    delta = dinput;
                }
                (Layer::MaxPool(_), Trace::Pool { argmax, in_len }) => {
                    let mut dinput = vec![0.0; *in_len];
                    for (out_idx, &src) in argmax.iter().enumerate() {
                        dinput[src] += delta[out_idx];
                    }
                    delta = dinput;
                }
                (Layer::Dropout(_), Trace::Dropout { mask }) => {
                    if let Some(mask) = mask {
                        for (d, m) in delta.iter_mut().zip(mask) {
                            *d *= m;
                        }
                    }
                }
                (Layer::Flatten, _) => {}
                (Layer::Dense(dense), Trace::Dense { input, post }) => {
                    let (woff, boff) = offsets[idx];
                    if dense.relu {
                        for (d, &p) in delta.iter_mut().zip(post) {
                            if p <= 0.0 {
                                *d = 0.0;
                            }
                        }
                    }
                    let mut dinput = vec![0.0; input.len()];
                    for (unit, &d) in delta.iter().enumerate() {
                        grads[boff + unit] += d;
                        let wrow = dense.weights.row(unit);
                        let gbase = woff + unit * input.len();
                        for (j, (&a, &w)) in input.iter().zip(wrow).enumerate() {
                            grads[gbase + j] += d * a;
                            dinput[j] += d * w;
                        }
                    }
                    delta = dinput;
                }
                _ => unreachable!("trace does not match layer"),
            }
        }
    }

    /// (kernel/weight offset, bias offset) into the flat parameter vector,
    /// per layer; parameterless layers get (0, 0).
    fn param_offsets(&self) -> Vec<(usize, usize)> {
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut cursor = 0;
        for layer in &self.layers {
            match layer {
                Layer::Conv(conv) => {
                    let k = cursor;
                    cursor += conv.kernels.len();
                    let b = cursor;
                    cursor += conv.bias.len();
                    offsets.push((k, b));
                }
                Layer::Dense(dense) => {
                    let w = cursor;
                    cursor += dense.weights.data().len();
                    let b = cursor;
                    cursor += dense.bias.len();
                    offsets.push((w, b));
                }
                _ => offsets.push((0, 0)),
            }
        }
        offsets
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Conv(c) => c.kernels.len() + c.bias.len(),
                Layer::Dense(d) => d.weights.data().len() + d.bias.len(),
                _ => 0,
            })
            .sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for layer in &self.layers {
            match layer {
                Layer::Conv(c) => {
                    out.extend_from_slice(&c.kernels.values);
                    out.extend_from_slice(&c.bias);
                }
                Layer::Dense(d) => {
                    out.extend_from_slice(d.weights.data());
                    out.extend_from_slice(&d.bias);
                }
                _ => {}
            }
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        let mut cursor = 0;
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(c) => {
                    let n = c.kernels.len();
                    c.kernels.values.copy_from_slice(&flat[cursor..cursor + n]);
                    cursor += n;
                    let nb = c.bias.len();
                    c.bias.copy_from_slice(&flat[cursor..cursor + nb]);
                    cursor += nb;
                }
                Layer::Dense(d) => {
                    let n = d.weights.data().len();
                    d.weights
                        .data_mut()
                        .copy_from_slice(&flat[cursor..cursor + n]);
                    cursor += n;
                    let nb = d.bias.len();
                    d.bias.copy_from_slice(&flat[cursor..cursor + nb]);
                    cursor += nb;
                }
                _ => {}
            }
        }
        assert_eq!(cursor, flat.len());
    }

    /// L2 penalty (l2/2)||W||^2 summed over regularized layers, and its
    /// gradient contribution added to `grads` (when given).
    fn penalty(&self, mut grads: Option<&mut [f64]>) -> f64 {
        let offsets = self.param_offsets();
        let mut total = 0.0;
        for (idx, layer) in self.layers.iter().enumerate() {
            let (weights, l2, off): (&[f64], f64, usize) = match layer {
                Layer::Conv(c) if c.l2 > 0.0 => (&c.kernels.values, c.l2, offsets[idx].0),
                Layer::Dense(d) if d.l2 > 0.0 => (d.weights.data(), d.l2, offsets[idx].0),
                _ => continue,
            };
            total += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
            if let Some(g) = grads.as_deref_mut() {
                for (i, w) in weights.iter().enumerate() {
                    g[off + i] += l2 * w;
                }
            }
        }
        total
    }

    /// Batch objective (mean cross-entropy + L2 penalty) and its flat
    /// gradient, computed without dropout. Used for training-free gradient
    /// verification and for validation metrics.
    pub fn loss_and_gradient(&self, images: &[Tensor], labels: &[usize]) -> (f64, Vec<f64>) {
        let batch = images.len() as f64;
        let mut grads = vec![0.0; self.n_params()];
        let mut loss = 0.0;
        for (img, &label) in images.iter().zip(labels) {
            let forward = self.forward_sample(img, &mut None);
            let (l, dlogits) = self.loss_and_dlogits(&forward.logits, label);
            loss += l;
            let scaled: Vec<f64> = dlogits.iter().map(|d| d / batch).collect();
            self.backward_sample(&forward, scaled, &mut grads);
        }
        loss /= batch;
        loss += self.penalty(Some(&mut grads));
        (loss, grads)
    }

    /// Evaluation-mode mean loss and accuracy.
    pub fn evaluate(&self, images: &[Tensor], labels: &[usize]) -> (f64, f64) {
        let mut loss = 0.0;
        let mut correct = 0usize;
        for (img, &label) in images.iter().zip(labels) {
            let forward = self.forward_sample(img, &mut None);
            let (l, _) = self.loss_and_dlogits(&forward.logits, label);
            loss += l;
            if predicted_label(self, &forward.logits) == label {
                correct += 1;
            }
        }
        let n = images.len() as f64;
        (loss / n + self.penalty(None), correct as f64 / n)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn predicted_label(model: &CNNModel, logits: &[f64]) -> usize {
    if logits.len() == 1 {
        usize::from(sigmoid(logits[0]) > 0.5)
    } else {
        let scores = model.head(logits);
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = k;
            }
        }
        best
    }
}

/// One row of the per-epoch metric log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// Trains with seeded shuffled mini-batches and dropout; the split must
/// provide train and validation partitions (the 80:10:10 protocol).
/// Returns the model and the per-epoch train/validation curves.
pub fn train_cnn(
    images: &[Tensor],
    labels: &[usize],
    split: &SplitIndex,
    cfg: &CNNConfig,
) -> Result<(CNNModel, Vec<EpochMetrics>)> {
    if images.len() != labels.len() {
        return Err(Error::Shape {
            expected: images.len(),
            got: labels.len(),
        });
    }
    let validation = split.validation.as_ref().ok_or_else(|| {
        Error::InvalidInput("CNN training requires a validation partition".into())
    })?;
    if split.train.is_empty() || validation.is_empty() {
        return Err(Error::InvalidInput(
            "CNN training requires non-empty train and validation partitions".into(),
        ));
    }
    let mut model = build_cnn(cfg)?;
    for img in images {
        model.check_input(img)?;
    }
    let head = match model.layers.last() {
        Some(Layer::Dense(d)) => d.bias.len(),
        _ => unreachable!(),
    };
    for &label in labels {
        let limit = if head == 1 { 2 } else { head };
        if label >= limit {
            return Err(Error::Label(format!(
                "label {label} out of range for {limit}-way head"
            )));
        }
    }

    let mut rng = Rng::new(cfg.seed.wrapping_add(1));
    let mut adam = Adam::new(cfg.learning_rate, model.n_params());
    let mut order = split.train.clone();
    let val_images: Vec<Tensor> = validation.iter().map(|&i| images[i].clone()).collect();
    let val_labels: Vec<usize> = validation.iter().map(|&i| labels[i]).collect();

    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut epoch_correct = 0usize;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let batch = chunk.len() as f64;
            let mut grads = vec![0.0; model.n_params()];
            let mut batch_loss = 0.0;
            for &i in chunk {
                let forward = model.forward_sample(&images[i], &mut Some(&mut rng));
                let (l, dlogits) = model.loss_and_dlogits(&forward.logits, labels[i]);
                batch_loss += l;
                if predicted_label(&model, &forward.logits) == labels[i] {
                    epoch_correct += 1;
                }
                let scaled: Vec<f64> = dlogits.iter().map(|d| d / batch).collect();
                model.backward_sample(&forward, scaled, &mut grads);
            }
            batch_loss /= batch;
            batch_loss += model.penalty(Some(&mut grads));
            epoch_loss += batch_loss;
            batches += 1;

            let mut params = model.params_flat();
            adam.step(&mut params, &grads);
            model.set_params_flat(&params);
        }
        let (val_loss, val_acc) = model.evaluate(&val_images, &val_labels);
        history.push(EpochMetrics {
            epoch,
            train_loss: epoch_loss / batches.max(1) as f64,
            train_acc: epoch_correct as f64 / order.len().max(1) as f64,
            val_loss,
            val_acc,
        });
    }
    Ok((model, history))
}

/// Labels and head scores. Binary scores are a single sigmoid column;
/// softmax scores are normalized rows.
pub fn predict_cnn(model: &CNNModel, images: &[Tensor]) -> Result<(Vec<usize>, Matrix)> {
    for img in images {
        model.check_input(img)?;
    }
    let head = match model.layers.last() {
        Some(Layer::Dense(d)) => d.bias.len(),
        _ => unreachable!(),
    };
    let mut scores = Matrix::zeros(images.len(), head);
    let mut labels = Vec::with_capacity(images.len());
    for (i, img) in images.iter().enumerate() {
        let forward = model.forward_sample(img, &mut None);
        let s = model.head(&forward.logits);
        for (k, &v) in s.iter().enumerate() {
            scores.set(i, k, v);
        }
        labels.push(predicted_label(model, &forward.logits));
    }
    Ok((labels, scores))
}
