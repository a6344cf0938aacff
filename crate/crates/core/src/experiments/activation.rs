use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::report::ExperimentReport;
use super::ExperimentError;
use crate::activations::ActivationSpec;
use crate::datasets::{gen_circles, gen_moons, gen_xor, split, Dataset, SyntheticKind};
use crate::network::{evaluate, reference_classifier, train, Network, TrainConfig};
use crate::numkit::{Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationConfig {
    pub samples: usize,
    /// Per-coordinate noise; `None` keeps each dataset's default.
    pub noise: Option<f64>,
    pub train_fraction: f64,
    pub train: TrainConfig,
    /// Decision-grid cells per axis.
    pub grid: usize,
}

impl Default for ActivationConfig {
    fn default() -> Self {
        Self {
            samples: 400,
            noise: None,
            train_fraction: 0.5,
            train: TrainConfig {
                epochs: 500,
                batch_size: 32,
                lr: 1e-2,
                weight_decay: 0.0,
                ..TrainConfig::default()
            },
            grid: 200,
        }
    }
}

/// Predicted class on a `resolution × resolution` lattice spanning the
/// data's bounding box, row-major with `y` outer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionGrid {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub resolution: usize,
    pub classes: Vec<usize>,
}

impl DecisionGrid {
    fn coord(range: (f64, f64), i: usize, resolution: usize) -> f64 {
        if resolution == 1 {
            return 0.5 * (range.0 + range.1);
        }
        range.0 + (range.1 - range.0) * i as f64 / (resolution - 1) as f64
    }

    pub fn compute(net: &Network, data: &Dataset, resolution: usize) -> Result<Self, ExperimentError> {
        if data.n_features() != 2 {
            return Err(ExperimentError::InvalidConfig("decision grids need 2-D inputs".into()));
        }
        if resolution == 0 {
            return Err(ExperimentError::InvalidConfig("grid resolution must be >= 1".into()));
        }
        let x = data.features();
        let bounds = |c: usize| {
            let col = x.column(c);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        let (x_range, y_range) = (bounds(0), bounds(1));
        let mut points = Vec::with_capacity(2 * resolution * resolution);
        for j in 0..resolution {
            for i in 0..resolution {
                points.push(Self::coord(x_range, i, resolution));
                points.push(Self::coord(y_range, j, resolution));
            }
        }
        let grid = Matrix::new(resolution * resolution, 2, points).map_err(crate::network::NetworkError::from)?;
        Ok(Self {
            x_range,
            y_range,
            resolution,
            classes: net.classify(&grid)?,
        })
    }

    /// `x,y,class` with one row per cell.
    pub fn write_csv(&self, out: impl Write) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "class"])?;
        let r = self.resolution;
        for j in 0..r {
            for i in 0..r {
                w.write_record([
                    Self::coord(self.x_range, i, r).to_string(),
                    Self::coord(self.y_range, j, r).to_string(),
                    self.classes[j * r + i].to_string(),
                ])?;
            }
        }
        w.flush().map_err(|source| ExperimentError::Io {
            path: "<csv>".into(),
            source,
        })?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ActivationOutcome {
    pub report: ExperimentReport,
    pub accuracy: f64,
    pub train_accuracy: f64,
    pub wall_time_s: f64,
    pub network: Network,
    pub grid: DecisionGrid,
}

#[derive(Serialize)]
struct EchoConfig<'a> {
    dataset: SyntheticKind,
    activation: String,
    #[serde(flatten)]
    config: &'a ActivationConfig,
}

#[derive(Serialize)]
struct RunMetrics {
    accuracy: f64,
    train_accuracy: f64,
    final_loss: Option<f64>,
    train_samples: usize,
    test_samples: usize,
    wall_time_s: f64,
}

fn generate(kind: SyntheticKind, config: &ActivationConfig, rng: &mut Rng) -> Result<Dataset, ExperimentError> {
    Ok(match (kind, config.noise) {
        (k, None) => k.generate_default(config.samples, rng)?,
        (SyntheticKind::Xor, Some(s)) => gen_xor(config.samples, s, rng)?,
        (SyntheticKind::Circles, Some(s)) => gen_circles(config.samples, 0.5, 1.0, s, rng)?,
        (SyntheticKind::Moons, Some(s)) => gen_moons(config.samples, s, rng)?,
    })
}

/// Generates the dataset, splits it, trains the reference classifier for
/// `spec`, and evaluates on the held-out half. Everything stochastic is
/// driven by `config.train.seed`.
pub fn run_activation_experiment(
    dataset: SyntheticKind,
    spec: ActivationSpec,
    config: &ActivationConfig,
) -> Result<ActivationOutcome, ExperimentError> {
    let seed = config.train.seed;
    let mut rng = Rng::seed(seed);
    let data = generate(dataset, config, &mut rng)?;
    let (train_set, test_set) = split(&data, config.train_fraction, &mut rng)?;
    let start = Instant::now();
    let mut net = reference_classifier(spec, &train_set, &mut rng)?;
    let training = train(&mut net, &train_set, &config.train)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let accuracy = evaluate(&net, &test_set)?.accuracy;
    let train_accuracy = evaluate(&net, &train_set)?.accuracy;
    let grid = DecisionGrid::compute(&net, &data, config.grid)?;

    let mut report = ExperimentReport::new(
        format!("activation/{dataset}"),
        &EchoConfig {
            dataset,
            activation: spec.to_string(),
            config,
        },
        seed,
    )?;
    report.push_run(&RunMetrics {
        accuracy,
        train_accuracy,
        final_loss: training.final_loss(),
        train_samples: train_set.len(),
        test_samples: test_set.len(),
        wall_time_s,
    })?;
    Ok(ActivationOutcome {
        report,
        accuracy,
        train_accuracy,
        wall_time_s,
        network: net,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(seed: u64) -> ActivationConfig {
        ActivationConfig {
            samples: 80,
            train: TrainConfig {
                epochs: 20,
                seed,
                ..ActivationConfig::default().train
            },
            grid: 12,
            ..ActivationConfig::default()
        }
    }

    #[test]
    fn grid_has_resolution_squared_rows() {
        let out = run_activation_experiment(SyntheticKind::Circles, ActivationSpec::LRelu { alpha: 0.01 }, &quick(1)).unwrap();
        assert_eq!(out.grid.classes.len(), 144);
        let mut buf = Vec::new();
        out.grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 145);
        assert_eq!(text.lines().next().unwrap(), "x,y,class");
        let first: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!((first[0], first[1]), (out.grid.x_range.0, out.grid.y_range.0));
    }

    #[test]
    fn reproducible_from_config() {
        let spec = ActivationSpec::Poly { degree: 3 };
        let a = run_activation_experiment(SyntheticKind::Xor, spec, &quick(4)).unwrap();
        let b = run_activation_experiment(SyntheticKind::Xor, spec, &quick(4)).unwrap();
        assert_eq!(a.accuracy, b.accuracy);
        assert_eq!(a.network, b.network);
        assert_eq!(a.grid, b.grid);
        let echo = &a.report.config;
        assert_eq!(echo["activation"], "poly:3");
        assert_eq!(echo["dataset"], "xor");
        assert_eq!(echo["train"]["seed"], 4);
    }

    #[test]
    fn noise_override_and_every_dataset() {
        for kind in [SyntheticKind::Xor, SyntheticKind::Circles, SyntheticKind::Moons] {
            let cfg = ActivationConfig {
                noise: Some(0.0),
                ..quick(2)
            };
            let out = run_activation_experiment(kind, ActivationSpec::Rbf { units: 8 }, &cfg).unwrap();
            assert!((0.0..=1.0).contains(&out.accuracy));
        }
    }
}
