use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{argmax, cross_entropy_loss, mse_loss, Network, NetworkError, OptimizerConfig, OptimizerKind, OptimizerState};
use crate::datasets::Dataset;
use crate::numkit::{Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub weight_decay: f64,
    pub dropout_p: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            optimizer: OptimizerKind::Adam,
            lr: 1e-3,
            weight_decay: 1e-4,
            dropout_p: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), NetworkError> {
        if self.batch_size == 0 {
            return Err(NetworkError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(NetworkError::InvalidConfig(format!("learning rate must be >= 0, got {}", self.lr)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(NetworkError::InvalidConfig(format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(NetworkError::InvalidDropout(self.dropout_p));
        }
        Ok(())
    }

    fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            kind: self.optimizer,
            lr: self.lr,
            weight_decay: self.weight_decay,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean loss over the epoch's samples.
    pub loss: f64,
    /// Running training accuracy over the epoch's batches (classification only).
    pub accuracy: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub epochs: Vec<EpochStats>,
    /// Wall-clock seconds spent in the training loop.
    pub wall_time_s: f64,
}

impl TrainingReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }
}

enum Target<'a> {
    Labels(&'a [usize]),
    Values(&'a Matrix),
}

/// Minibatch training on softmax cross-entropy. Deterministic given
/// `config.seed`; prune masks are re-applied after every update.
pub fn train(net: &mut Network, data: &Dataset, config: &TrainConfig) -> Result<TrainingReport, NetworkError> {
    fit(net, data.features(), Target::Labels(data.labels()), config)
}

/// Minibatch training on mean squared error against `target`.
pub fn train_regression(
    net: &mut Network,
    x: &Matrix,
    target: &Matrix,
    config: &TrainConfig,
) -> Result<TrainingReport, NetworkError> {
    if x.rows() != target.rows() {
        return Err(crate::numkit::LinalgError::shape("train_regression target", x, target).into());
    }
    fit(net, x, Target::Values(target), config)
}

fn fit(net: &mut Network, x: &Matrix, target: Target<'_>, config: &TrainConfig) -> Result<TrainingReport, NetworkError> {
    config.validate()?;
    let n = x.rows();
    if n == 0 {
        return Err(NetworkError::InvalidConfig("training set is empty".into()));
    }
    let mut rng = Rng::seed(config.seed);
    let mut opt = OptimizerState::new(config.optimizer());
    let mut order: Vec<usize> = (0..n).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    net.apply_masks();
    let start = Instant::now();

    for epoch in 0..config.epochs {
        let epoch_start = Instant::now();
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (batch, idx) in order.chunks(config.batch_size).enumerate() {
            let xb = x.select_rows(idx);
            let (out, cache) = net.forward(&xb, true, config.dropout_p, &mut rng)?;
            let (loss, grad) = match &target {
                Target::Labels(labels) => {
                    let yb: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
                    correct += out.iter_rows().zip(&yb).filter(|(r, &y)| argmax(r) == y).count();
                    cross_entropy_loss(&out, &yb)?
                }
                Target::Values(t) => mse_loss(&out, &t.select_rows(idx))?,
            };
            if !loss.is_finite() {
                return Err(NetworkError::NonFiniteLoss { epoch, batch });
            }
            loss_sum += loss * idx.len() as f64;
            let grads = net.backward(&cache, &grad)?;
            opt.step(net, &grads)?;
        }
        let accuracy = match target {
            Target::Labels(_) => Some(correct as f64 / n as f64),
            Target::Values(_) => None,
        };
        let stats = EpochStats {
            epoch,
            loss: loss_sum / n as f64,
            accuracy,
            seconds: epoch_start.elapsed().as_secs_f64(),
        };
        log::debug!("epoch {epoch}: loss {:.6}", stats.loss);
        epochs.push(stats);
    }
    Ok(TrainingReport {
        epochs,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
}

const EVAL_SHARD: usize = 1024;

/// Accuracy and confusion matrix. Large sets are sharded across threads and
/// merged in shard order.
pub fn evaluate(net: &Network, data: &Dataset) -> Result<Evaluation, NetworkError> {
    if data.is_empty() {
        return Err(NetworkError::InvalidConfig("evaluation set is empty".into()));
    }
    let x = data.features();
    let shards: Vec<Vec<usize>> = (0..data.len())
        .collect::<Vec<_>>()
        .chunks(EVAL_SHARD)
        .map(<[usize]>::to_vec)
        .collect();
    let predictions: Vec<Result<Vec<usize>, NetworkError>> = if shards.len() == 1 {
        vec![net.classify(x)]
    } else {
        thread::scope(|s| {
            let handles: Vec<_> = shards
                .iter()
                .map(|idx| s.spawn(move || net.classify(&x.select_rows(idx))))
                .collect();
            handles.into_iter().map(|h| h.join().expect("evaluation worker panicked")).collect()
        })
    };
    let classes = data.n_classes().max(net.output_dim().unwrap_or(0));
    let mut confusion = vec![vec![0usize; classes]; classes];
    let mut correct = 0;
    let mut predicted = Vec::with_capacity(data.len());
    for p in predictions {
        predicted.extend(p?);
    }
    for (&truth, &guess) in data.labels().iter().zip(&predicted) {
        confusion[truth][guess] += 1;
        correct += usize::from(truth == guess);
    }
    Ok(Evaluation {
        accuracy: correct as f64 / data.len() as f64,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::{ActivationSpec, LeakyRelu};
    use crate::datasets::{gen_gaussian_mixture, gen_xor, split};
    use crate::network::{reference_classifier, Affine, Layer};

    fn constant_class_zero(inputs: usize) -> Network {
        let w = Matrix::zeros(inputs, 2);
        Network::new(vec![Layer::affine(Affine::new(w, vec![1.0, 0.0]).unwrap())]).unwrap()
    }

    #[test]
    fn constant_predictor_accuracy() {
        let net = constant_class_zero(2);
        let all_zero = Dataset::new("z", Matrix::zeros(6, 2), vec![0; 6], Some(2)).unwrap();
        assert_eq!(evaluate(&net, &all_zero).unwrap().accuracy, 1.0);
        let balanced = Dataset::new("b", Matrix::zeros(6, 2), vec![0, 1, 0, 1, 0, 1], Some(2)).unwrap();
        let e = evaluate(&net, &balanced).unwrap();
        assert_eq!(e.accuracy, 0.5);
        let row_sums: Vec<usize> = e.confusion.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(row_sums, balanced.class_counts());
    }

    #[test]
    fn sharded_evaluation_matches_single_pass() {
        let mut rng = Rng::seed(3);
        let d = gen_xor(4000, 0.2, &mut rng).unwrap();
        let net = reference_classifier(ActivationSpec::LRelu { alpha: 0.01 }, &d, &mut rng).unwrap();
        let e = evaluate(&net, &d).unwrap();
        let direct = net.classify(d.features()).unwrap();
        let correct = direct.iter().zip(d.labels()).filter(|(a, b)| a == b).count();
        assert_eq!(e.accuracy, correct as f64 / 4000.0);
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let mut rng = Rng::seed(1);
        let d = gen_xor(40, 0.1, &mut rng).unwrap();
        let mut net = reference_classifier(ActivationSpec::PRelu, &d, &mut rng).unwrap();
        let before = net.clone();
        let cfg = TrainConfig {
            epochs: 5,
            lr: 0.0,
            dropout_p: 0.2,
            ..TrainConfig::default()
        };
        train(&mut net, &d, &cfg).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn separable_blobs_reach_full_train_accuracy() {
        let mut rng = Rng::seed(8);
        let d = gen_gaussian_mixture(200, &[[-2.0, -2.0], [2.0, 2.0]], 0.5, &mut rng).unwrap();
        let mut net = Network::new(vec![Layer::affine(Affine::init(2, 2, &mut rng))]).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            lr: 1e-2,
            ..TrainConfig::default()
        };
        train(&mut net, &d, &cfg).unwrap();
        assert_eq!(evaluate(&net, &d).unwrap().accuracy, 1.0);
    }

    #[test]
    fn training_is_bit_reproducible() {
        let run = || {
            let mut rng = Rng::seed(4);
            let d = gen_xor(80, 0.1, &mut rng).unwrap();
            let mut net = reference_classifier(ActivationSpec::Poly { degree: 3 }, &d, &mut rng).unwrap();
            let cfg = TrainConfig {
                epochs: 5,
                dropout_p: 0.1,
                seed: 11,
                ..TrainConfig::default()
            };
            let report = train(&mut net, &d, &cfg).unwrap();
            (net, report.epochs.iter().map(|e| e.loss).collect::<Vec<_>>())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_loss_is_reported_with_position() {
        let mut rng = Rng::seed(0);
        let d = gen_xor(64, 0.1, &mut rng).unwrap();
        let mut net = Network::new(vec![
            Layer::affine(Affine::new(Matrix::filled(2, 2, 1e300), vec![0.0, 0.0]).unwrap()),
            Layer::leaky_relu(LeakyRelu::parametric()),
            Layer::affine(Affine::new(Matrix::from_rows(&[[1e300, -1e300], [1e300, -1e300]]).unwrap(), vec![0.0; 2]).unwrap()),
        ])
        .unwrap();
        let err = train(&mut net, &d, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, NetworkError::NonFiniteLoss { epoch: 0, batch: 0 }), "{err}");
    }

    #[test]
    fn invalid_config_rejected() {
        let mut rng = Rng::seed(0);
        let d = gen_xor(8, 0.1, &mut rng).unwrap();
        let mut net = constant_class_zero(2);
        for cfg in [
            TrainConfig { batch_size: 0, ..TrainConfig::default() },
            TrainConfig { dropout_p: 1.0, ..TrainConfig::default() },
            TrainConfig { lr: -1.0, ..TrainConfig::default() },
        ] {
            assert!(train(&mut net, &d, &cfg).is_err());
        }
    }

    #[test]
    fn xor_poly_reference_learns() {
        let mut rng = Rng::seed(2);
        let all = gen_xor(400, 0.1, &mut rng).unwrap();
        let (tr, te) = split(&all, 0.5, &mut rng).unwrap();
        let mut net = reference_classifier(ActivationSpec::Poly { degree: 3 }, &tr, &mut rng).unwrap();
        let cfg = TrainConfig {
            epochs: 500,
            seed: 2,
            ..TrainConfig::default()
        };
        train(&mut net, &tr, &cfg).unwrap();
        assert!(evaluate(&net, &te).unwrap().accuracy >= 0.9);
    }
}
