use serde::{Deserialize, Serialize};

use super::{check_input, glorot_uniform, ActivationError};
use crate::numkit::{Matrix, Rng};

/// Dense layer of polynomial neurons: `y_j = Σ_i w_ij · x_i^d + b_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialLayer {
    degree: u32,
    /// `in × out`
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Gradients produced by [`PolynomialLayer::backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolyGrads {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub input: Matrix,
}

impl PolynomialLayer {
    pub fn new(degree: u32, weights: Matrix, bias: Vec<f64>) -> Result<Self, ActivationError> {
        if degree == 0 {
            return Err(ActivationError::InvalidDegree);
        }
        if bias.len() != weights.cols() {
            return Err(crate::numkit::LinalgError::Shape {
                op: "polynomial bias",
                left: weights.shape(),
                right: (1, bias.len()),
            }
            .into());
        }
        Ok(Self { degree, weights, bias })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init(inputs: usize, outputs: usize, degree: u32, rng: &mut Rng) -> Result<Self, ActivationError> {
        Self::new(degree, glorot_uniform(inputs, outputs, rng), vec![0.0; outputs])
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn inputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.cols()
    }

    fn powered(&self, x: &Matrix) -> Matrix {
        let d = self.degree as i32;
        x.map(|v| v.powi(d))
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix, ActivationError> {
        check_input("poly_forward", x, self.inputs())?;
        let mut y = self.powered(x).matmul(&self.weights)?;
        y.add_row_vector(&self.bias)?;
        Ok(y)
    }

    /// `∂y/∂w_ij = x_i^d`, `∂y/∂x_i = d · w_ij · x_i^(d−1)`, chained with `upstream`.
    pub fn backward(&self, x: &Matrix, upstream: &Matrix) -> Result<PolyGrads, ActivationError> {
        check_input("poly_backward", x, self.inputs())?;
        check_input("poly_backward upstream", upstream, self.outputs())?;
        let weights = self.powered(x).t_matmul(upstream)?;
        let bias = upstream.column_sums();
        let d = self.degree as i32;
        let slope = x.map(|v| f64::from(self.degree) * v.powi(d - 1));
        let input = upstream.matmul_t(&self.weights)?.hadamard(&slope)?;
        Ok(PolyGrads { weights, bias, input })
    }
}
