//! Differentiable non-linear layers: polynomial neurons, radial basis
//! function units and leaky / parametric ReLU.
//!
//! Every layer works on a batch (one sample per row) and exposes a
//! `forward` / `backward` pair; the backward pass takes the gradient of the
//! loss with respect to the layer output and returns gradients for the
//! parameters and the input.

mod leaky;
mod poly;
mod rbf;

pub use leaky::LeakyRelu;
pub use poly::{PolyGrads, PolynomialLayer};
pub use rbf::{RbfGrads, RbfLayer};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{LinalgError, Matrix, Rng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActivationError {
    #[error("polynomial degree must be >= 1")]
    InvalidDegree,
    #[error("leaky ReLU slope must satisfy 0 < alpha < 1, got {0}")]
    InvalidAlpha(f64),
    #[error("RBF spread for unit {unit} must be > 0, got {sigma}")]
    InvalidSpread { unit: usize, sigma: f64 },
    #[error("cannot place {units} RBF centers on {samples} samples")]
    TooManyUnits { units: usize, samples: usize },
    #[error("invalid activation spec '{0}' (expected poly:<degree>, rbf:<units>, lrelu:<alpha> or prelu)")]
    Spec(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Activation choice as written on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActivationSpec {
    /// `poly:<degree>`
    Poly { degree: u32 },
    /// `rbf:<units>`
    Rbf { units: usize },
    /// `lrelu:<alpha>`
    LRelu { alpha: f64 },
    /// `prelu`: leaky ReLU with a learnable slope starting at 0.01.
    PRelu,
}

impl FromStr for ActivationSpec {
    type Err = ActivationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ActivationError::Spec(s.to_string());
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match (name, arg) {
            ("poly", Some(a)) => {
                let degree: u32 = a.parse().map_err(|_| bad())?;
                if degree == 0 {
                    return Err(ActivationError::InvalidDegree);
                }
                Ok(ActivationSpec::Poly { degree })
            }
            ("rbf", Some(a)) => {
                let units: usize = a.parse().map_err(|_| bad())?;
                if units == 0 {
                    return Err(bad());
                }
                Ok(ActivationSpec::Rbf { units })
            }
            ("lrelu", Some(a)) => {
                let alpha: f64 = a.parse().map_err(|_| bad())?;
                LeakyRelu::new(alpha, false)?;
                Ok(ActivationSpec::LRelu { alpha })
            }
            ("prelu", None) => Ok(ActivationSpec::PRelu),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ActivationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationSpec::Poly { degree } => write!(f, "poly:{degree}"),
            ActivationSpec::Rbf { units } => write!(f, "rbf:{units}"),
            ActivationSpec::LRelu { alpha } => write!(f, "lrelu:{alpha}"),
            ActivationSpec::PRelu => f.write_str("prelu"),
        }
    }
}

/// Symmetric uniform initialisation `U(−√(6/(fan_in+fan_out)), +√(6/(fan_in+fan_out)))`.
pub fn glorot_uniform(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Matrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut w = Matrix::zeros(fan_in, fan_out);
    for x in w.data_mut() {
        *x = rng.uniform(-limit, limit).expect("positive limit");
    }
    w
}

pub(crate) fn check_input(op: &'static str, x: &Matrix, expected_cols: usize) -> Result<(), LinalgError> {
    if x.cols() != expected_cols {
        return Err(LinalgError::Shape {
            op,
            left: x.shape(),
            right: (expected_cols, 0),
        });
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod gradcheck {
    //! Five-point central differences, kept independent of the analytic paths.

    pub const STEP: f64 = 1e-4;

    pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
        (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-4)
    }

    /// d f / d params[i] for every i, by central differences.
    pub fn numeric_gradient(params: &mut [f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        (0..params.len())
            .map(|i| {
                let orig = params[i];
                let mut at = |offset: f64| {
                    params[i] = orig + offset;
                    f(params)
                };
                let d = -at(2.0 * STEP) + 8.0 * at(STEP) - 8.0 * at(-STEP) + at(-2.0 * STEP);
                params[i] = orig;
                d / (12.0 * STEP)
            })
            .collect()
    }
}
