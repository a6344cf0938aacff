use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DimredError;
use crate::activations::LeakyRelu;
use crate::network::{mse_loss, train_regression, Affine, Layer, Network, TrainConfig, MODEL_VERSION};
use crate::numkit::{Matrix, Rng};

const AE_FORMAT: &str = "geonet-autoencoder";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeConfig {
    /// Width of the hidden layer on each side of the bottleneck; 0 drops
    /// the hidden layers and gives a linear autoencoder.
    pub hidden: usize,
    pub train: TrainConfig,
}

impl Default for AeConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            train: TrainConfig {
                epochs: 5,
                weight_decay: 0.0,
                ..TrainConfig::default()
            },
        }
    }
}

/// Encoder `f_θ` and decoder `g_φ` around a `latent`-wide bottleneck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autoencoder {
    pub encoder: Network,
    pub decoder: Network,
}

fn leaky() -> Layer {
    Layer::leaky_relu(LeakyRelu::new(LeakyRelu::DEFAULT_ALPHA, false).expect("default slope is valid"))
}

impl Autoencoder {
    /// `input → hidden → latent → hidden → input` with leaky-ReLU hidden
    /// layers and linear bottleneck and output.
    pub fn new(input: usize, hidden: usize, latent: usize, rng: &mut Rng) -> Result<Self, DimredError> {
        if latent == 0 {
            return Err(DimredError::InvalidLatent);
        }
        let (encoder, decoder) = if hidden == 0 {
            (
                vec![Layer::affine(Affine::init(input, latent, rng))],
                vec![Layer::affine(Affine::init(latent, input, rng))],
            )
        } else {
            (
                vec![
                    Layer::affine(Affine::init(input, hidden, rng)),
                    leaky(),
                    Layer::affine(Affine::init(hidden, latent, rng)),
                ],
                vec![
                    Layer::affine(Affine::init(latent, hidden, rng)),
                    leaky(),
                    Layer::affine(Affine::init(hidden, input, rng)),
                ],
            )
        };
        Ok(Self {
            encoder: Network::new(encoder)?,
            decoder: Network::new(decoder)?,
        })
    }

    pub fn latent(&self) -> usize {
        self.encoder.output_dim().expect("encoder ends in an affine layer")
    }

    pub fn encode(&self, x: &Matrix) -> Result<Matrix, DimredError> {
        Ok(self.encoder.predict(x)?)
    }

    pub fn decode(&self, z: &Matrix) -> Result<Matrix, DimredError> {
        Ok(self.decoder.predict(z)?)
    }

    /// `(1/n) Σ ‖xᵢ − x̂ᵢ‖²`
    pub fn reconstruction_loss(&self, x: &Matrix) -> Result<f64, DimredError> {
        let x_hat = self.decode(&self.encode(x)?)?;
        Ok(mse_loss(&x_hat, x)?.0)
    }

    fn stacked(&self) -> Network {
        let mut layers = self.encoder.layers.clone();
        layers.extend(self.decoder.layers.iter().cloned());
        Network { layers }
    }

    pub fn to_json(&self) -> Result<String, DimredError> {
        Ok(serde_json::to_string(&AeDocument {
            format: AE_FORMAT.into(),
            version: MODEL_VERSION,
            encoder: serde_json::from_str(&self.encoder.to_json()?)?,
            decoder: serde_json::from_str(&self.decoder.to_json()?)?,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self, DimredError> {
        let doc: AeDocument = serde_json::from_str(text)?;
        if doc.format != AE_FORMAT || doc.version != MODEL_VERSION {
            return Err(DimredError::Format(format!(
                "expected {AE_FORMAT} v{MODEL_VERSION}, found {} v{}",
                doc.format, doc.version
            )));
        }
        let encoder = Network::from_json(&doc.encoder.to_string())?;
        let decoder = Network::from_json(&doc.decoder.to_string())?;
        if encoder.output_dim() != decoder.input_dim() || decoder.output_dim() != encoder.input_dim() {
            return Err(DimredError::Format("encoder and decoder widths do not match".into()));
        }
        Ok(Self { encoder, decoder })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DimredError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|source| DimredError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct AeDocument {
    format: String,
    version: u32,
    encoder: serde_json::Value,
    decoder: serde_json::Value,
}

/// Trains an autoencoder on `data` with the reconstruction objective and
/// returns it with the final full-data reconstruction loss.
pub fn ae_train(data: &Matrix, latent: usize, config: &AeConfig) -> Result<(Autoencoder, f64), DimredError> {
    if data.rows() == 0 {
        return Err(DimredError::TooFewSamples { needed: 1, found: 0 });
    }
    let mut rng = Rng::seed(config.train.seed);
    let ae = Autoencoder::new(data.cols(), config.hidden, latent, &mut rng)?;
    let split = ae.encoder.layers.len();
    let mut net = ae.stacked();
    train_regression(&mut net, data, data, &config.train)?;
    let decoder = Network::new(net.layers.split_off(split))?;
    let encoder = Network::new(net.layers)?;
    let trained = Autoencoder { encoder, decoder };
    let loss = trained.reconstruction_loss(data)?;
    Ok((trained, loss))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(rng: &mut Rng) -> Matrix {
        Matrix::new(10, 4, (0..40).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect()).unwrap()
    }

    fn identity_config() -> AeConfig {
        AeConfig {
            hidden: 16,
            train: TrainConfig {
                epochs: 2000,
                batch_size: 10,
                lr: 1e-2,
                weight_decay: 0.0,
                ..TrainConfig::default()
            },
        }
    }

    #[test]
    fn identity_capacity_reaches_small_loss() {
        let x = toy(&mut Rng::seed(1));
        let (ae, loss) = ae_train(&x, 4, &identity_config()).unwrap();
        assert!(loss < 1e-3, "loss {loss}");
        let z = ae.encode(&x).unwrap();
        assert_eq!(z.shape(), (10, 4));
        let back = ae.decode(&z).unwrap();
        assert!(back.max_abs_diff(&x) < 0.1);
        assert_eq!(ae.encode(&x).unwrap(), z);
    }

    #[test]
    fn training_lowers_loss_and_is_deterministic() {
        let x = toy(&mut Rng::seed(2));
        let cfg = AeConfig {
            hidden: 8,
            train: TrainConfig {
                epochs: 50,
                ..TrainConfig::default()
            },
        };
        let untrained = Autoencoder::new(4, 8, 2, &mut Rng::seed(cfg.train.seed)).unwrap();
        let before = untrained.reconstruction_loss(&x).unwrap();
        let (a, after) = ae_train(&x, 2, &cfg).unwrap();
        let (b, again) = ae_train(&x, 2, &cfg).unwrap();
        assert!(after < before && after >= 0.0);
        assert_eq!((a, after), (b, again));
    }

    #[test]
    fn shapes_and_validation() {
        let mut rng = Rng::seed(0);
        let ae = Autoencoder::new(6, 0, 3, &mut rng).unwrap();
        assert_eq!(ae.latent(), 3);
        assert_eq!(ae.encoder.layers.len(), 1);
        assert!(ae.encode(&Matrix::zeros(2, 5)).is_err());
        assert!(matches!(Autoencoder::new(6, 4, 0, &mut rng), Err(DimredError::InvalidLatent)));
        let back = Autoencoder::from_json(&ae.to_json().unwrap()).unwrap();
        assert_eq!(back, ae);
    }
}
