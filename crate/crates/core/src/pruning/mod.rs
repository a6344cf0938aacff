//! Pruning viewed as edge and node removal in the network DAG: global
//! magnitude pruning, activation-based unit pruning, layer ablation and
//! masked fine-tuning.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::Dataset;
use crate::network::{evaluate, train, Network, NetworkError, TrainConfig, TrainingReport};
use crate::numkit::{Matrix, Rng};

/// Default number of training samples used to probe activations.
pub const PROBE_SIZE: usize = 512;

#[derive(Debug, Error)]
pub enum PruneError {
    #[error("prune fraction must lie in [0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("activation threshold must be >= 0, got {0}")]
    InvalidThreshold(f64),
    #[error("probe set is empty")]
    EmptyProbe,
    #[error("pruning would remove every unit of layer {layer} ({name})")]
    LayerEmptied { layer: usize, name: &'static str },
    #[error("mask has {found} layers, network has {expected}")]
    MaskLength { expected: usize, found: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Per-layer binary masks (`None` for layers without weights).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneMask {
    pub layers: Vec<Option<Matrix>>,
    /// Fraction of zero entries per masked layer.
    pub sparsity: Vec<Option<f64>>,
}

impl PruneMask {
    /// Nothing pruned.
    pub fn all_ones(net: &Network) -> Self {
        Self::from_layers(
            net.layers
                .iter()
                .map(|l| l.weights().map(|w| Matrix::filled(w.rows(), w.cols(), 1.0)))
                .collect(),
        )
    }

    /// The masks currently attached to `net`, with all-ones for unmasked layers.
    pub fn of(net: &Network) -> Self {
        Self::from_layers(
            net.layers
                .iter()
                .map(|l| {
                    l.weights()
                        .map(|w| l.mask.clone().unwrap_or_else(|| Matrix::filled(w.rows(), w.cols(), 1.0)))
                })
                .collect(),
        )
    }

    fn from_layers(layers: Vec<Option<Matrix>>) -> Self {
        let mut mask = PruneMask {
            sparsity: vec![None; layers.len()],
            layers,
        };
        mask.refresh();
        mask
    }

    fn refresh(&mut self) {
        self.sparsity = self
            .layers
            .iter()
            .map(|m| {
                m.as_ref().map(|m| {
                    let zeros = m.data().iter().filter(|&&v| v == 0.0).count();
                    zeros as f64 / m.data().len().max(1) as f64
                })
            })
            .collect();
    }

    pub fn zero_count(&self) -> usize {
        self.layers
            .iter()
            .flatten()
            .map(|m| m.data().iter().filter(|&&v| v == 0.0).count())
            .sum()
    }

    pub fn total(&self) -> usize {
        self.layers.iter().flatten().map(|m| m.data().len()).sum()
    }

    pub fn overall_sparsity(&self) -> f64 {
        self.zero_count() as f64 / self.total().max(1) as f64
    }

    /// Attaches every mask to `net`, zeroing the masked weights.
    pub fn apply_to(&self, net: &mut Network) -> Result<(), PruneError> {
        if self.layers.len() != net.layers.len() {
            return Err(PruneError::MaskLength {
                expected: net.layers.len(),
                found: self.layers.len(),
            });
        }
        for (i, m) in self.layers.iter().enumerate() {
            if let Some(m) = m {
                net.set_mask(i, m.clone())?;
            }
        }
        Ok(())
    }
}

/// Zeroes the `⌊fraction · total⌋` smallest-magnitude weights across all
/// layers. Ties are broken by (layer, row, col); biases are never pruned.
pub fn magnitude_prune(net: &Network, fraction: f64) -> Result<(Network, PruneMask), PruneError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(PruneError::InvalidFraction(fraction));
    }
    let mut ranked: Vec<(f64, usize, usize)> = Vec::with_capacity(net.weight_count());
    for (li, layer) in net.layers.iter().enumerate() {
        if let Some(w) = layer.weights() {
            ranked.extend(w.data().iter().enumerate().map(|(k, v)| (v.abs(), li, k)));
        }
    }
    let cut = (fraction * ranked.len() as f64).floor() as usize;
    // Row-major flat index order equals (row, col) order.
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut mask = PruneMask::all_ones(net);
    for &(_, li, k) in &ranked[..cut] {
        mask.layers[li].as_mut().expect("weight layer").data_mut()[k] = 0.0;
    }
    mask.refresh();
    let mut pruned = net.clone();
    mask.apply_to(&mut pruned)?;
    Ok((pruned, mask))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitActivity {
    pub layer: usize,
    pub unit: usize,
    pub mean_abs_activation: f64,
    pub pruned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerAblation {
    pub layer: usize,
    pub kind: String,
    pub ablatable: bool,
    pub accuracy: Option<f64>,
    /// Baseline accuracy minus ablated accuracy.
    pub accuracy_drop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub probe_samples: usize,
    pub baseline_accuracy: f64,
    pub units: Vec<UnitActivity>,
    pub layers: Vec<LayerAblation>,
}

/// `size` distinct training samples chosen by `seed` (all of them when the
/// set is smaller). Returns the subset and the chosen indices.
pub fn select_probe(train: &Dataset, size: usize, seed: u64) -> (Dataset, Vec<usize>) {
    let k = size.min(train.len());
    let mut idx = Rng::seed(seed).sample_indices(train.len(), k);
    idx.sort_unstable();
    (train.subset(&idx), idx)
}

/// Hidden units: outputs of a weight layer that feed, through elementwise
/// layers only, into another affine or polynomial layer. Yields
/// `(producer, consumer)` layer indices.
fn hidden_unit_layers(net: &Network) -> Vec<(usize, usize)> {
    let weighted: Vec<usize> = (0..net.layers.len()).filter(|&i| net.layers[i].is_trainable()).collect();
    weighted
        .windows(2)
        .filter(|w| matches!(net.layers[w[1]].name(), "affine" | "polynomial"))
        .map(|w| (w[0], w[1]))
        .collect()
}

fn unit_activity(net: &Network, probe: &Dataset) -> Result<Vec<UnitActivity>, PruneError> {
    let (_, cache) = net.forward(probe.features(), false, 0.0, &mut Rng::seed(0))?;
    let mut units = Vec::new();
    for (producer, consumer) in hidden_unit_layers(net) {
        let a = &cache.inputs[consumer];
        for u in 0..a.cols() {
            let mean = (0..a.rows()).map(|r| a.get(r, u).abs()).sum::<f64>() / a.rows() as f64;
            units.push(UnitActivity {
                layer: producer,
                unit: u,
                mean_abs_activation: mean,
                pruned: false,
            });
        }
    }
    Ok(units)
}

/// Removes hidden units whose mean |activation| over `probe` is below
/// `threshold` by masking their incoming column and outgoing row.
pub fn activation_prune(
    net: &Network,
    probe: &Dataset,
    threshold: f64,
) -> Result<(Network, PruneMask, SensitivityReport), PruneError> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(PruneError::InvalidThreshold(threshold));
    }
    if probe.is_empty() {
        return Err(PruneError::EmptyProbe);
    }
    let mut units = unit_activity(net, probe)?;
    let mut mask = PruneMask::of(net);
    for (producer, consumer) in hidden_unit_layers(net) {
        let layer_units: Vec<&mut UnitActivity> = units.iter_mut().filter(|u| u.layer == producer).collect();
        let width = layer_units.len();
        let mut removed = 0;
        for u in layer_units {
            if u.mean_abs_activation < threshold {
                u.pruned = true;
                removed += 1;
                let inc = mask.layers[producer].as_mut().expect("weight layer");
                for r in 0..inc.rows() {
                    inc.set(r, u.unit, 0.0);
                }
                let out = mask.layers[consumer].as_mut().expect("weight layer");
                out.row_mut(u.unit).fill(0.0);
            }
        }
        if width > 0 && removed == width {
            return Err(PruneError::LayerEmptied {
                layer: producer,
                name: net.layers[producer].name(),
            });
        }
    }
    mask.refresh();
    let mut pruned = net.clone();
    mask.apply_to(&mut pruned)?;
    let baseline_accuracy = evaluate(net, probe)?.accuracy;
    let report = SensitivityReport {
        probe_samples: probe.len(),
        baseline_accuracy,
        units,
        layers: Vec::new(),
    };
    Ok((pruned, mask, report))
}

/// Accuracy on `probe` with each hidden layer (every layer but the last)
/// replaced by the identity. Layers whose input and output widths differ
/// are reported as non-ablatable.
pub fn layer_sensitivity(net: &Network, probe: &Dataset) -> Result<SensitivityReport, PruneError> {
    if probe.is_empty() {
        return Err(PruneError::EmptyProbe);
    }
    let baseline = evaluate(net, probe)?.accuracy;
    let mut layers = Vec::new();
    for i in 0..net.layers.len().saturating_sub(1) {
        let layer = &net.layers[i];
        let ablatable = layer.inputs() == layer.outputs();
        let accuracy = if ablatable {
            let mut rest = net.layers.clone();
            rest.remove(i);
            Some(evaluate(&Network::new(rest)?, probe)?.accuracy)
        } else {
            None
        };
        layers.push(LayerAblation {
            layer: i,
            kind: layer.name().to_string(),
            ablatable,
            accuracy,
            accuracy_drop: accuracy.map(|a| baseline - a),
        });
    }
    Ok(SensitivityReport {
        probe_samples: probe.len(),
        baseline_accuracy: baseline,
        units: unit_activity(net, probe)?,
        layers,
    })
}

/// Ordinary training with `mask` attached, so masked weights are re-zeroed
/// after every optimiser step and stay zero in the result.
pub fn fine_tune(
    net: &Network,
    mask: &PruneMask,
    data: &Dataset,
    config: &TrainConfig,
) -> Result<(Network, TrainingReport), PruneError> {
    let mut tuned = net.clone();
    mask.apply_to(&mut tuned)?;
    let report = train(&mut tuned, data, config)?;
    Ok((tuned, report))
}
