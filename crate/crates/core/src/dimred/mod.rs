//! Dimensionality reduction: PCA by covariance eigendecomposition and a
//! dense autoencoder trained on reconstruction error.

mod autoencoder;
mod pca;

pub use autoencoder::{ae_train, AeConfig, Autoencoder};
pub use pca::{pca_fit, PcaModel};

use std::path::PathBuf;

use thiserror::Error;

use crate::network::NetworkError;
use crate::numkit::LinalgError;

#[derive(Debug, Error)]
pub enum DimredError {
    #[error("k = {k} is outside 1..={features}")]
    InvalidK { k: usize, features: usize },
    #[error("latent size must be >= 1")]
    InvalidLatent,
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
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
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}
