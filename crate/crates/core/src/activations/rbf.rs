use serde::{Deserialize, Serialize};

use super::{check_input, glorot_uniform, ActivationError};
use crate::datasets::Dataset;
use crate::numkit::{LinalgError, Matrix, Rng};

/// Gaussian radial basis units followed by a linear readout.
///
/// Unit `u` responds with `φ_u(x) = exp(−‖x − c_u‖² / (2σ_u²))`; the layer
/// output is `φ · readout + readout_bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfLayer {
    /// `units × in`
    pub centers: Matrix,
    pub sigmas: Vec<f64>,
    /// `units × out`
    pub readout: Matrix,
    pub readout_bias: Vec<f64>,
    /// When false (the default) centers and spreads stay where
    /// [`RbfLayer::init_centers`] put them and only the readout learns.
    pub train_centers: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbfGrads {
    pub readout: Matrix,
    pub readout_bias: Vec<f64>,
    pub centers: Matrix,
    pub sigmas: Vec<f64>,
    pub input: Matrix,
}

impl RbfLayer {
    pub fn new(
        centers: Matrix,
        sigmas: Vec<f64>,
        readout: Matrix,
        readout_bias: Vec<f64>,
    ) -> Result<Self, ActivationError> {
        let units = centers.rows();
        if sigmas.len() != units || readout.rows() != units || readout_bias.len() != readout.cols() {
            return Err(LinalgError::InvalidArgument(format!(
                "inconsistent RBF shapes: centers {:?}, {} spreads, readout {:?}, {} biases",
                centers.shape(),
                sigmas.len(),
                readout.shape(),
                readout_bias.len()
            ))
            .into());
        }
        if let Some((unit, &sigma)) = sigmas.iter().enumerate().find(|(_, &s)| !(s > 0.0 && s.is_finite())) {
            return Err(ActivationError::InvalidSpread { unit, sigma });
        }
        Ok(Self {
            centers,
            sigmas,
            readout,
            readout_bias,
            train_centers: false,
        })
    }

    /// Picks `n_units` distinct training points as centers (sampling without
    /// replacement) and gives every unit the same spread: the mean pairwise
    /// distance between the chosen centers, or 1 for a single center. The
    /// readout to `outputs` classes gets Glorot-uniform weights.
    pub fn init_centers(
        train: &Dataset,
        n_units: usize,
        outputs: usize,
        rng: &mut Rng,
    ) -> Result<Self, ActivationError> {
        if n_units == 0 || n_units > train.len() {
            return Err(ActivationError::TooManyUnits {
                units: n_units,
                samples: train.len(),
            });
        }
        let chosen = rng.sample_indices(train.len(), n_units);
        let centers = train.features().select_rows(&chosen);
        let sigma = mean_pairwise_distance(&centers);
        Self::new(
            centers,
            vec![sigma; n_units],
            glorot_uniform(n_units, outputs, rng),
            vec![0.0; outputs],
        )
    }

    pub fn units(&self) -> usize {
        self.centers.rows()
    }

    pub fn inputs(&self) -> usize {
        self.centers.cols()
    }

    pub fn outputs(&self) -> usize {
        self.readout.cols()
    }

    /// Unit responses `φ`, one row per sample and one column per unit.
    pub fn activations(&self, x: &Matrix) -> Result<Matrix, ActivationError> {
        check_input("rbf_forward", x, self.inputs())?;
        let mut phi = Matrix::zeros(x.rows(), self.units());
        for (s, xs) in x.iter_rows().enumerate() {
            for u in 0..self.units() {
                let dist2: f64 = xs.iter().zip(self.centers.row(u)).map(|(a, c)| (a - c) * (a - c)).sum();
                let sigma = self.sigmas[u];
                phi.set(s, u, (-dist2 / (2.0 * sigma * sigma)).exp());
            }
        }
        Ok(phi)
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix, ActivationError> {
        let mut y = self.activations(x)?.matmul(&self.readout)?;
        y.add_row_vector(&self.readout_bias)?;
        Ok(y)
    }

    /// Gradients for readout, centers, spreads and input. Center and spread
    /// gradients are always computed; the optimiser ignores them unless
    /// `train_centers` is set.
    pub fn backward(&self, x: &Matrix, upstream: &Matrix) -> Result<RbfGrads, ActivationError> {
        check_input("rbf_backward upstream", upstream, self.outputs())?;
        let phi = self.activations(x)?;
        let readout = phi.t_matmul(upstream)?;
        let readout_bias = upstream.column_sums();
        let grad_phi = upstream.matmul_t(&self.readout)?;

        let dim = self.inputs();
        let mut input = Matrix::zeros(x.rows(), dim);
        let mut centers = Matrix::zeros(self.units(), dim);
        let mut sigmas = vec![0.0; self.units()];
        for s in 0..x.rows() {
            let xs = x.row(s);
            for (u, grad_sigma) in sigmas.iter_mut().enumerate() {
                let sigma = self.sigmas[u];
                // dL/d(dist²) = g_φ · φ · (−1 / (2σ²))
                let g = grad_phi.get(s, u) * phi.get(s, u);
                if g == 0.0 {
                    continue;
                }
                let inv_s2 = 1.0 / (sigma * sigma);
                let c = self.centers.row(u);
                let mut dist2 = 0.0;
                for (k, (&xk, &ck)) in xs.iter().zip(c).enumerate() {
                    let diff = xk - ck;
                    dist2 += diff * diff;
                    let dx = -g * diff * inv_s2;
                    input.data_mut()[s * dim + k] += dx;
                    centers.data_mut()[u * dim + k] -= dx;
                }
                *grad_sigma += g * dist2 * inv_s2 / sigma;
            }
        }
        Ok(RbfGrads {
            readout,
            readout_bias,
            centers,
            sigmas,
            input,
        })
    }
}

fn mean_pairwise_distance(points: &Matrix) -> f64 {
    let n = points.rows();
    if n < 2 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            total += points
                .row(i)
                .iter()
                .zip(points.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            pairs += 1;
        }
    }
    let mean = total / pairs as f64;
    // Coincident centers would give σ = 0.
    if mean > 0.0 {
        mean
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::super::gradcheck::{numeric_gradient, relative_error};
    use super::*;

    fn single_unit(center: &[f64], sigma: f64) -> RbfLayer {
        RbfLayer::new(
            Matrix::row_vector(center),
            vec![sigma],
            Matrix::from_rows(&[[1.0]]).unwrap(),
            vec![0.0],
        )
        .unwrap()
    }

    #[test]
    fn response_is_one_at_the_center() {
        let layer = single_unit(&[0.3, -0.7], 0.8);
        let phi = layer.activations(&Matrix::row_vector(&[0.3, -0.7])).unwrap();
        assert_eq!(phi.data(), &[1.0]);
    }

    #[test]
    fn response_at_sigma_root_two_is_e_inverse() {
        let sigma = 0.5;
        let layer = single_unit(&[0.0, 0.0], sigma);
        let r = sigma * 2f64.sqrt();
        let phi = layer.activations(&Matrix::row_vector(&[r, 0.0])).unwrap();
        assert!((phi.data()[0] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((phi.data()[0] - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn response_decreases_with_distance_and_stays_in_unit_interval() {
        let layer = single_unit(&[0.0], 1.3);
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let phi = layer.activations(&Matrix::row_vector(&[i as f64 * 0.1])).unwrap().data()[0];
            assert!(phi > 0.0 && phi <= 1.0);
            assert!(phi < prev);
            assert_eq!(phi == 1.0, i == 0);
            prev = phi;
        }
    }

    #[test]
    fn nonpositive_spread_rejected() {
        let err = RbfLayer::new(Matrix::zeros(2, 1), vec![1.0, 0.0], Matrix::zeros(2, 1), vec![0.0]).unwrap_err();
        assert_eq!(err, ActivationError::InvalidSpread { unit: 1, sigma: 0.0 });
    }

    fn line_dataset(xs: &[f64]) -> Dataset {
        let f = Matrix::new(xs.len(), 1, xs.to_vec()).unwrap();
        Dataset::new("line", f, vec![0; xs.len()], Some(2)).unwrap()
    }

    #[test]
    fn all_units_is_a_permutation_of_the_data() {
        let d = line_dataset(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let layer = RbfLayer::init_centers(&d, 5, 2, &mut Rng::seed(3)).unwrap();
        let mut c = layer.centers.data().to_vec();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn two_centers_at_distance_two() {
        let d = line_dataset(&[-1.0, 1.0]);
        let layer = RbfLayer::init_centers(&d, 2, 2, &mut Rng::seed(0)).unwrap();
        assert_eq!(layer.sigmas, vec![2.0, 2.0]);
        let one = RbfLayer::init_centers(&d, 1, 2, &mut Rng::seed(0)).unwrap();
        assert_eq!(one.sigmas, vec![1.0]);
    }

    #[test]
    fn center_selection_is_seeded() {
        let d = line_dataset(&(0..40).map(f64::from).collect::<Vec<_>>());
        let a = RbfLayer::init_centers(&d, 6, 2, &mut Rng::seed(11)).unwrap();
        let b = RbfLayer::init_centers(&d, 6, 2, &mut Rng::seed(11)).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            RbfLayer::init_centers(&d, 41, 2, &mut Rng::seed(11)),
            Err(ActivationError::TooManyUnits { units: 41, samples: 40 })
        ));
    }

    fn probe(layer: &RbfLayer, x: &Matrix, up: &Matrix) -> f64 {
        let y = layer.forward(x).unwrap();
        y.data().iter().zip(up.data()).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::seed(17);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let (units, dim, out, batch) = (4, 3, 2, 3);
            let mut random = |r: usize, c: usize, lo: f64, hi: f64| {
                Matrix::new(r, c, (0..r * c).map(|_| rng.uniform(lo, hi).unwrap()).collect()).unwrap()
            };
            let centers = random(units, dim, -1.0, 1.0);
            let readout = random(units, out, -1.0, 1.0);
            let x = random(batch, dim, -1.0, 1.0);
            let up = random(batch, out, -1.0, 1.0);
            let sigmas = random(1, units, 0.5, 1.5).into_data();
            let bias = random(1, out, -0.5, 0.5).into_data();
            let layer = RbfLayer::new(centers, sigmas, readout, bias).unwrap();
            let g = layer.backward(&x, &up).unwrap();

            let mut p = layer.readout.data().to_vec();
            let n_r = numeric_gradient(&mut p, |v| {
                let mut l = layer.clone();
                l.readout.data_mut().copy_from_slice(v);
                probe(&l, &x, &up)
            });
            let mut p = layer.readout_bias.clone();
            let n_b = numeric_gradient(&mut p, |v| {
                let mut l = layer.clone();
                l.readout_bias.copy_from_slice(v);
                probe(&l, &x, &up)
            });
            let mut p = layer.centers.data().to_vec();
            let n_c = numeric_gradient(&mut p, |v| {
                let mut l = layer.clone();
                l.centers.data_mut().copy_from_slice(v);
                probe(&l, &x, &up)
            });
            let mut p = layer.sigmas.clone();
            let n_s = numeric_gradient(&mut p, |v| {
                let mut l = layer.clone();
                l.sigmas.copy_from_slice(v);
                probe(&l, &x, &up)
            });
            let mut p = x.data().to_vec();
            let n_x = numeric_gradient(&mut p, |v| probe(&layer, &Matrix::new(batch, dim, v.to_vec()).unwrap(), &up));

            let analytic = g
                .readout
                .data()
                .iter()
                .chain(&g.readout_bias)
                .chain(g.centers.data())
                .chain(&g.sigmas)
                .chain(g.input.data());
            let numeric = n_r.iter().chain(&n_b).chain(&n_c).chain(&n_s).chain(&n_x);
            for (a, n) in analytic.zip(numeric) {
                worst = worst.max(relative_error(*a, *n));
            }
        }
        assert!(worst < 1e-5, "worst relative error {worst}");
    }
}
