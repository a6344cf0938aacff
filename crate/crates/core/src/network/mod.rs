//! Feed-forward networks built from affine, polynomial, RBF and leaky-ReLU
//! layers, with losses, optimisers and the training loop.

mod arch;
mod loss;
mod model;
mod optim;
mod train;

pub use arch::{mlp, mnist_mlp, reference_classifier, REFERENCE_HIDDEN};
pub use loss::{cross_entropy_loss, mse_loss, softmax};
pub use model::MODEL_VERSION;
pub use optim::{OptimizerConfig, OptimizerKind, OptimizerState};
pub use train::{evaluate, train, train_regression, EpochStats, Evaluation, TrainConfig, TrainingReport};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activations::{check_input, glorot_uniform, ActivationError, LeakyRelu, PolynomialLayer, RbfLayer};
use crate::datasets::DataError;
use crate::numkit::{LinalgError, Matrix, Rng};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("network has no layers")]
    Empty,
    #[error("layer {index} expects {expected} inputs but the previous layer produces {found}")]
    ShapeChain { index: usize, expected: usize, found: usize },
    #[error("dropout probability must satisfy 0 <= p < 1, got {0}")]
    InvalidDropout(f64),
    #[error("label {label} at sample {index} is outside 0..{classes}")]
    LabelOutOfRange { index: usize, label: usize, classes: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("mask for layer {layer}: {reason}")]
    Mask { layer: usize, reason: String },
    #[error("model document: {0}")]
    Format(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Fully connected layer `y = x·W + b` with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Affine {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self, NetworkError> {
        if bias.len() != weights.cols() {
            return Err(LinalgError::Shape {
                op: "affine bias",
                left: weights.shape(),
                right: (1, bias.len()),
            }
            .into());
        }
        Ok(Self { weights, bias })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        Self {
            weights: glorot_uniform(inputs, outputs, rng),
            bias: vec![0.0; outputs],
        }
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix, LinalgError> {
        check_input("affine_forward", x, self.weights.rows())?;
        let mut y = x.matmul(&self.weights)?;
        y.add_row_vector(&self.bias)?;
        Ok(y)
    }
}

/// Which kind of parameter a group holds. Weight decay and pruning masks
/// only touch [`ParamRole::Weight`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    Weight,
    Bias,
    /// RBF centers/spreads (when trainable) and the PReLU slope.
    Extra,
}

/// Gradient groups of one layer, in the order of [`Layer::params_mut`].
pub type LayerGrads = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerKind {
    Affine(Affine),
    Polynomial(PolynomialLayer),
    Rbf(RbfLayer),
    LeakyRelu(LeakyRelu),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub kind: LayerKind,
    /// Binary matrix shaped like the layer's weights; zero entries are pruned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Matrix>,
}

impl From<LayerKind> for Layer {
    fn from(kind: LayerKind) -> Self {
        Layer { kind, mask: None }
    }
}

impl Layer {
    pub fn affine(a: Affine) -> Self {
        LayerKind::Affine(a).into()
    }

    pub fn polynomial(p: PolynomialLayer) -> Self {
        LayerKind::Polynomial(p).into()
    }

    pub fn rbf(r: RbfLayer) -> Self {
        LayerKind::Rbf(r).into()
    }

    pub fn leaky_relu(l: LeakyRelu) -> Self {
        LayerKind::LeakyRelu(l).into()
    }

    /// Input width, or `None` for elementwise layers.
    pub fn inputs(&self) -> Option<usize> {
        match &self.kind {
            LayerKind::Affine(a) => Some(a.weights.rows()),
            LayerKind::Polynomial(p) => Some(p.inputs()),
            LayerKind::Rbf(r) => Some(r.inputs()),
            LayerKind::LeakyRelu(_) => None,
        }
    }

    pub fn outputs(&self) -> Option<usize> {
        match &self.kind {
            LayerKind::Affine(a) => Some(a.weights.cols()),
            LayerKind::Polynomial(p) => Some(p.outputs()),
            LayerKind::Rbf(r) => Some(r.outputs()),
            LayerKind::LeakyRelu(_) => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match &self.kind {
            LayerKind::Affine(_) => "affine",
            LayerKind::Polynomial(_) => "polynomial",
            LayerKind::Rbf(_) => "rbf",
            LayerKind::LeakyRelu(l) if l.learnable => "prelu",
            LayerKind::LeakyRelu(_) => "leaky_relu",
        }
    }

    /// The prunable weight matrix (the readout for RBF layers).
    pub fn weights(&self) -> Option<&Matrix> {
        match &self.kind {
            LayerKind::Affine(a) => Some(&a.weights),
            LayerKind::Polynomial(p) => Some(&p.weights),
            LayerKind::Rbf(r) => Some(&r.readout),
            LayerKind::LeakyRelu(_) => None,
        }
    }

    pub fn weights_mut(&mut self) -> Option<&mut Matrix> {
        match &mut self.kind {
            LayerKind::Affine(a) => Some(&mut a.weights),
            LayerKind::Polynomial(p) => Some(&mut p.weights),
            LayerKind::Rbf(r) => Some(&mut r.readout),
            LayerKind::LeakyRelu(_) => None,
        }
    }

    pub fn is_trainable(&self) -> bool {
        self.weights().is_some()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix, NetworkError> {
        Ok(match &self.kind {
            LayerKind::Affine(a) => a.forward(x)?,
            LayerKind::Polynomial(p) => p.forward(x)?,
            LayerKind::Rbf(r) => r.forward(x)?,
            LayerKind::LeakyRelu(l) => l.forward(x),
        })
    }

    /// Parameter gradients (ordered like [`Layer::params_mut`]) and, when
    /// `need_input` is set, the gradient with respect to `x`.
    pub fn backward(
        &self,
        x: &Matrix,
        upstream: &Matrix,
        need_input: bool,
    ) -> Result<(LayerGrads, Option<Matrix>), NetworkError> {
        Ok(match &self.kind {
            LayerKind::Affine(a) => {
                check_input("affine_backward upstream", upstream, a.weights.cols())?;
                let gw = x.t_matmul(upstream)?;
                let gb = upstream.column_sums();
                let gx = if need_input {
                    Some(upstream.matmul_t(&a.weights)?)
                } else {
                    None
                };
                (vec![gw.into_data(), gb], gx)
            }
            LayerKind::Polynomial(p) => {
                let g = p.backward(x, upstream)?;
                (vec![g.weights.into_data(), g.bias], Some(g.input))
            }
            LayerKind::Rbf(r) => {
                let g = r.backward(x, upstream)?;
                let mut groups = vec![g.readout.into_data(), g.readout_bias];
                if r.train_centers {
                    groups.push(g.centers.into_data());
                    groups.push(g.sigmas);
                }
                (groups, Some(g.input))
            }
            LayerKind::LeakyRelu(l) => {
                let (gx, ga) = l.backward(x, upstream)?;
                let groups = if l.learnable { vec![vec![ga]] } else { Vec::new() };
                (groups, Some(gx))
            }
        })
    }

    /// Mutable views of every trainable parameter group.
    pub fn params_mut(&mut self) -> Vec<(ParamRole, &mut [f64])> {
        match &mut self.kind {
            LayerKind::Affine(a) => vec![
                (ParamRole::Weight, a.weights.data_mut()),
                (ParamRole::Bias, &mut a.bias[..]),
            ],
            LayerKind::Polynomial(p) => vec![
                (ParamRole::Weight, p.weights.data_mut()),
                (ParamRole::Bias, &mut p.bias[..]),
            ],
            LayerKind::Rbf(r) => {
                let mut groups = vec![
                    (ParamRole::Weight, r.readout.data_mut()),
                    (ParamRole::Bias, &mut r.readout_bias[..]),
                ];
                if r.train_centers {
                    groups.push((ParamRole::Extra, r.centers.data_mut()));
                    groups.push((ParamRole::Extra, &mut r.sigmas[..]));
                }
                groups
            }
            LayerKind::LeakyRelu(l) => {
                if l.learnable {
                    vec![(ParamRole::Extra, std::slice::from_mut(l.alpha_mut()))]
                } else {
                    Vec::new()
                }
            }
        }
    }

    /// Pulls parameters with hard constraints back into range after an update.
    pub(crate) fn sanitize(&mut self) {
        match &mut self.kind {
            LayerKind::Rbf(r) => {
                for s in &mut r.sigmas {
                    *s = s.max(1e-6);
                }
            }
            LayerKind::LeakyRelu(l) => {
                let a = l.alpha();
                l.set_alpha(a);
            }
            _ => {}
        }
    }

    pub fn apply_mask(&mut self) {
        if let Some(mask) = self.mask.take() {
            if let Some(w) = self.weights_mut() {
                for (v, &m) in w.data_mut().iter_mut().zip(mask.data()) {
                    if m == 0.0 {
                        *v = 0.0;
                    }
                }
            }
            self.mask = Some(mask);
        }
    }
}

/// Per-forward record needed by [`Network::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input seen by each layer, after dropout.
    pub inputs: Vec<Matrix>,
    /// Scaled keep-mask applied to each layer's input, if any.
    pub dropout: Vec<Option<Matrix>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self, NetworkError> {
        let net = Network { layers };
        net.check_chain()?;
        Ok(net)
    }

    fn check_chain(&self) -> Result<(), NetworkError> {
        if self.layers.is_empty() {
            return Err(NetworkError::Empty);
        }
        let mut width: Option<usize> = None;
        for (index, layer) in self.layers.iter().enumerate() {
            if let (Some(found), Some(expected)) = (width, layer.inputs()) {
                if found != expected {
                    return Err(NetworkError::ShapeChain { index, expected, found });
                }
            }
            if let Some(out) = layer.outputs() {
                width = Some(out);
            }
        }
        if self.input_dim().is_none() {
            return Err(NetworkError::Format("network has no layer with a fixed width".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.layers.iter().find_map(Layer::inputs)
    }

    pub fn output_dim(&self) -> Option<usize> {
        self.layers.iter().rev().find_map(Layer::outputs)
    }

    /// Total number of prunable weights.
    pub fn weight_count(&self) -> usize {
        self.layers.iter().filter_map(Layer::weights).map(|w| w.data().len()).sum()
    }

    /// Runs the batch through every layer. In train mode with `dropout_p > 0`
    /// the input of every trainable layer after the first is multiplied by
    /// an inverted-dropout keep mask (survivors scaled by `1/(1−p)`).
    pub fn forward(
        &self,
        x: &Matrix,
        train_mode: bool,
        dropout_p: f64,
        rng: &mut Rng,
    ) -> Result<(Matrix, ForwardCache), NetworkError> {
        if !(0.0..1.0).contains(&dropout_p) {
            return Err(NetworkError::InvalidDropout(dropout_p));
        }
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            dropout: Vec::with_capacity(self.layers.len()),
        };
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut keep = None;
            if train_mode && dropout_p > 0.0 && i > 0 && layer.is_trainable() {
                let scale = 1.0 / (1.0 - dropout_p);
                let mut m = Matrix::zeros(h.rows(), h.cols());
                for v in m.data_mut() {
                    if !rng.bernoulli(dropout_p) {
                        *v = scale;
                    }
                }
                h = h.hadamard(&m)?;
                keep = Some(m);
            }
            let out = layer.forward(&h)?;
            cache.inputs.push(std::mem::replace(&mut h, out));
            cache.dropout.push(keep);
        }
        Ok((h, cache))
    }

    /// Eval-mode forward pass.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix, NetworkError> {
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.forward(&h)?;
        }
        Ok(h)
    }

    /// Predicted class per row.
    pub fn classify(&self, x: &Matrix) -> Result<Vec<usize>, NetworkError> {
        Ok(self.predict(x)?.iter_rows().map(argmax).collect())
    }

    /// Backpropagates `grad_out` (gradient of the loss w.r.t. the network
    /// output) through the cached forward pass.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Matrix) -> Result<Vec<LayerGrads>, NetworkError> {
        let n = self.layers.len();
        let mut grads = vec![Vec::new(); n];
        let mut g = grad_out.clone();
        for i in (0..n).rev() {
            let (lg, gx) = self.layers[i].backward(&cache.inputs[i], &g, i > 0)?;
            grads[i] = lg;
            if let Some(gx) = gx {
                g = match &cache.dropout[i] {
                    Some(m) => gx.hadamard(m)?,
                    None => gx,
                };
            }
        }
        Ok(grads)
    }

    pub fn apply_masks(&mut self) {
        for layer in &mut self.layers {
            layer.apply_mask();
        }
    }

    /// Attaches `mask` to layer `index` and zeroes the masked weights.
    pub fn set_mask(&mut self, index: usize, mask: Matrix) -> Result<(), NetworkError> {
        let layer = self.layers.get_mut(index).ok_or_else(|| NetworkError::Mask {
            layer: index,
            reason: "no such layer".into(),
        })?;
        check_mask(index, layer, &mask)?;
        layer.mask = Some(mask);
        layer.apply_mask();
        Ok(())
    }
}

pub(crate) fn check_mask(index: usize, layer: &Layer, mask: &Matrix) -> Result<(), NetworkError> {
    let err = |reason: String| NetworkError::Mask { layer: index, reason };
    let w = layer
        .weights()
        .ok_or_else(|| err(format!("{} layer has no weights", layer.name())))?;
    if w.shape() != mask.shape() {
        return Err(err(format!("shape {:?} does not match weights {:?}", mask.shape(), w.shape())));
    }
    if mask.data().iter().any(|&m| m != 0.0 && m != 1.0) {
        return Err(err("entries must be 0 or 1".into()));
    }
    Ok(())
}

/// Index of the largest entry; the first one wins on ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
