use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::report::ExperimentReport;
use super::ExperimentError;
use crate::datasets::{load_mnist_dir, Dataset, MnistSplit};
use crate::dimred::{ae_train, pca_fit, AeConfig};
use crate::network::{evaluate, mlp, train, Network, TrainConfig};
use crate::numkit::Rng;
use crate::pruning::{fine_tune, layer_sensitivity, magnitude_prune, select_probe, PruneMask, SensitivityReport, PROBE_SIZE};

/// Environment variable naming the directory that holds the IDX files.
pub const DATA_DIR_ENV: &str = "GEONET_DATA_DIR";

/// `$GEONET_DATA_DIR`, else `./data/mnist` when present, else the copy
/// shipped in the source tree.
pub fn default_data_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        return PathBuf::from(dir);
    }
    let local = PathBuf::from("data/mnist");
    if local.is_dir() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DimredMethod {
    Baseline,
    Pca(usize),
    Ae(usize),
    Prune(f64),
}

impl fmt::Display for DimredMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Baseline => f.write_str("baseline"),
            Self::Pca(k) => write!(f, "pca:{k}"),
            Self::Ae(d) => write!(f, "ae:{d}"),
            Self::Prune(x) => write!(f, "prune:{x}"),
        }
    }
}

impl FromStr for DimredMethod {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || {
            ExperimentError::InvalidConfig(format!(
                "unknown method {s:?} (expected baseline, pca:<k>, ae:<latent> or prune:<fraction>)"
            ))
        };
        if s == "baseline" {
            return Ok(Self::Baseline);
        }
        let (name, arg) = s.split_once(':').ok_or_else(bad)?;
        match name {
            "pca" => arg.parse().ok().filter(|&k| k > 0).map(Self::Pca).ok_or_else(bad),
            "ae" => arg.parse().ok().filter(|&d| d > 0).map(Self::Ae).ok_or_else(bad),
            "prune" => arg
                .parse()
                .ok()
                .filter(|f: &f64| (0.0..=1.0).contains(f))
                .map(Self::Prune)
                .ok_or_else(bad),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for DimredMethod {
    type Error = ExperimentError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<DimredMethod> for String {
    fn from(m: DimredMethod) -> Self {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimredConfig {
    pub data_dir: PathBuf,
    /// Training / test samples kept, in file order; `None` uses the
    /// desk-scale defaults.
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    pub hidden: usize,
    pub train: TrainConfig,
    pub ae: AeConfig,
    pub fine_tune_epochs: usize,
}

impl Default for DimredConfig {
    fn default() -> Self {
        Self {
            data_dir: default_data_dir(),
            train_limit: None,
            test_limit: None,
            hidden: 128,
            train: TrainConfig {
                epochs: 5,
                batch_size: 64,
                lr: 1e-3,
                weight_decay: 0.0,
                ..TrainConfig::default()
            },
            ae: AeConfig::default(),
            fine_tune_epochs: 2,
        }
    }
}

impl DimredConfig {
    fn load(&self) -> Result<(Dataset, Dataset), ExperimentError> {
        let train = load_mnist_dir(&self.data_dir, MnistSplit::Train, self.train_limit)?;
        let test = load_mnist_dir(&self.data_dir, MnistSplit::Test, self.test_limit)?;
        Ok((train, test))
    }

    fn classifier(&self, inputs: usize) -> Network {
        mlp(inputs, self.hidden, 10, &mut Rng::seed(self.train.seed))
    }
}

#[derive(Debug, Clone)]
pub struct DimredOutcome {
    pub report: ExperimentReport,
    pub accuracy: f64,
    pub features: usize,
    /// PCA explained-variance ratio or autoencoder reconstruction loss.
    pub reduction_metric: Option<f64>,
    pub prune: Option<PruneOutcome>,
}

#[derive(Debug, Clone)]
pub struct PruneOutcome {
    pub report: ExperimentReport,
    pub baseline_accuracy: f64,
    /// Straight after masking, before fine-tuning.
    pub pruned_accuracy: f64,
    pub accuracy: f64,
    pub sparsity: f64,
    /// Every masked weight is still exactly zero after fine-tuning.
    pub mask_preserved: bool,
    pub network: Network,
    pub mask: PruneMask,
    pub sensitivity: SensitivityReport,
}

#[derive(Serialize)]
struct Echo<'a> {
    method: String,
    #[serde(flatten)]
    config: &'a DimredConfig,
}

fn train_and_evaluate(
    config: &DimredConfig,
    train_set: &Dataset,
    test_set: &Dataset,
) -> Result<(Network, f64, f64), ExperimentError> {
    let mut net = config.classifier(train_set.n_features());
    let start = Instant::now();
    train(&mut net, train_set, &config.train)?;
    let seconds = start.elapsed().as_secs_f64();
    let accuracy = evaluate(&net, test_set)?.accuracy;
    Ok((net, accuracy, seconds))
}

fn mask_preserved(net: &Network, mask: &PruneMask) -> bool {
    net.layers.iter().zip(&mask.layers).all(|(layer, m)| match (layer.weights(), m) {
        (Some(w), Some(m)) => w.data().iter().zip(m.data()).all(|(&w, &m)| m != 0.0 || w == 0.0),
        _ => true,
    })
}

/// Train a baseline MLP, zero the smallest `fraction` of weights globally,
/// fine-tune with the mask held, and profile layer sensitivity on a probe
/// drawn from the training set.
pub fn run_prune_experiment(fraction: f64, config: &DimredConfig) -> Result<PruneOutcome, ExperimentError> {
    let (train_set, test_set) = config.load()?;
    let start = Instant::now();
    let (baseline, baseline_accuracy, baseline_s) = train_and_evaluate(config, &train_set, &test_set)?;
    let (pruned, mask) = magnitude_prune(&baseline, fraction)?;
    let pruned_accuracy = evaluate(&pruned, &test_set)?.accuracy;
    let ft_config = TrainConfig {
        epochs: config.fine_tune_epochs,
        ..config.train
    };
    let (tuned, _) = fine_tune(&pruned, &mask, &train_set, &ft_config)?;
    let accuracy = evaluate(&tuned, &test_set)?.accuracy;
    let preserved = mask_preserved(&tuned, &mask);
    let (probe, _) = select_probe(&train_set, PROBE_SIZE, config.train.seed);
    let sensitivity = layer_sensitivity(&tuned, &probe)?;
    let wall_time_s = start.elapsed().as_secs_f64();

    let mut report = ExperimentReport::new(
        "dimred/prune",
        &Echo {
            method: DimredMethod::Prune(fraction).to_string(),
            config,
        },
        config.train.seed,
    )?;
    report.push_run(&serde_json::json!({
        "baseline_accuracy": baseline_accuracy,
        "pruned_accuracy": pruned_accuracy,
        "accuracy": accuracy,
        "sparsity": mask.overall_sparsity(),
        "mask_preserved": preserved,
        "baseline_train_s": baseline_s,
        "wall_time_s": wall_time_s,
    }))?;
    Ok(PruneOutcome {
        report,
        baseline_accuracy,
        pruned_accuracy,
        accuracy,
        sparsity: mask.overall_sparsity(),
        mask_preserved: preserved,
        network: tuned,
        mask,
        sensitivity,
    })
}

/// Reduce → train → evaluate (or the pruning pipeline) on the MNIST subset.
pub fn run_dimred_experiment(method: DimredMethod, config: &DimredConfig) -> Result<DimredOutcome, ExperimentError> {
    if let DimredMethod::Prune(fraction) = method {
        let p = run_prune_experiment(fraction, config)?;
        return Ok(DimredOutcome {
            report: p.report.clone(),
            accuracy: p.accuracy,
            features: p.network.input_dim().unwrap_or(0),
            reduction_metric: None,
            prune: Some(p),
        });
    }
    let (train_set, test_set) = config.load()?;
    let start = Instant::now();
    let (train_x, test_x, metric, metric_name) = match method {
        DimredMethod::Baseline => (train_set.clone(), test_set.clone(), None, None),
        DimredMethod::Pca(k) => {
            let model = pca_fit(train_set.features(), k)?;
            (
                train_set.with_features(model.transform(train_set.features())?)?,
                test_set.with_features(model.transform(test_set.features())?)?,
                Some(model.explained_variance_ratio()),
                Some("explained_variance_ratio"),
            )
        }
        DimredMethod::Ae(latent) => {
            let ae_cfg = AeConfig {
                train: TrainConfig {
                    seed: config.train.seed,
                    ..config.ae.train
                },
                ..config.ae
            };
            let (ae, loss) = ae_train(train_set.features(), latent, &ae_cfg)?;
            (
                train_set.with_features(ae.encode(train_set.features())?)?,
                test_set.with_features(ae.encode(test_set.features())?)?,
                Some(loss),
                Some("reconstruction_loss"),
            )
        }
        DimredMethod::Prune(_) => unreachable!("handled above"),
    };
    let reduce_s = start.elapsed().as_secs_f64();
    let (_, accuracy, train_s) = train_and_evaluate(config, &train_x, &test_x)?;

    let mut report = ExperimentReport::new(
        format!("dimred/{}", method.to_string().split(':').next().unwrap_or("baseline")),
        &Echo {
            method: method.to_string(),
            config,
        },
        config.train.seed,
    )?;
    let mut run = serde_json::json!({
        "accuracy": accuracy,
        "features": train_x.n_features(),
        "train_samples": train_x.len(),
        "test_samples": test_x.len(),
        "reduce_s": reduce_s,
        "train_s": train_s,
    });
    if let (Some(v), Some(name)) = (metric, metric_name) {
        run[name] = serde_json::json!(v);
    }
    report.push_run(&run)?;
    Ok(DimredOutcome {
        report,
        accuracy,
        features: train_x.n_features(),
        reduction_metric: metric,
        prune: None,
    })
}
