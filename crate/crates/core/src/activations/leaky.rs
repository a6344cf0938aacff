use serde::{Deserialize, Serialize};

use super::ActivationError;
use crate::numkit::{LinalgError, Matrix};

/// `f(x) = x` for `x > 0`, `αx` otherwise. With `learnable` set this is the
/// parametric variant: one slope per layer, updated by the optimiser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakyRelu {
    alpha: f64,
    pub learnable: bool,
}

impl LeakyRelu {
    pub const DEFAULT_ALPHA: f64 = 0.01;

    pub fn new(alpha: f64, learnable: bool) -> Result<Self, ActivationError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ActivationError::InvalidAlpha(alpha));
        }
        Ok(Self { alpha, learnable })
    }

    pub fn parametric() -> Self {
        Self {
            alpha: Self::DEFAULT_ALPHA,
            learnable: true,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Optimiser hook for the parametric variant. The slope is clamped back
    /// into `(0, 1)` so the negative side never goes flat.
    pub fn set_alpha(&mut self, alpha: f64) {
        self.alpha = alpha.clamp(1e-6, 1.0 - 1e-6);
    }

    pub(crate) fn alpha_mut(&mut self) -> &mut f64 {
        &mut self.alpha
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if x > 0.0 {
            x
        } else {
            self.alpha * x
        }
    }

    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        if x > 0.0 {
            1.0
        } else {
            self.alpha
        }
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        x.map(|v| self.apply(v))
    }

    /// Returns `(∂L/∂x, ∂L/∂α)`.
    pub fn backward(&self, x: &Matrix, upstream: &Matrix) -> Result<(Matrix, f64), LinalgError> {
        if x.shape() != upstream.shape() {
            return Err(LinalgError::shape("leaky_relu_backward", x, upstream));
        }
        let mut grad = upstream.clone();
        let mut grad_alpha = 0.0;
        for (g, &v) in grad.data_mut().iter_mut().zip(x.data()) {
            if v <= 0.0 {
                grad_alpha += *g * v;
            }
            *g *= self.slope(v);
        }
        Ok((grad, grad_alpha))
    }
}

#[cfg(test)]
mod tests {
    use super::super::gradcheck::{numeric_gradient, relative_error};
    use super::*;
    use crate::numkit::Rng;

    #[test]
    fn piecewise_values() {
        let f = LeakyRelu::new(0.01, false).unwrap();
        assert_eq!(f.apply(5.0), 5.0);
        assert!((f.apply(-10.0) - (-0.1)).abs() < 1e-15);
        assert_eq!(f.apply(0.0), 0.0);
        assert!(f.apply(1e-12).abs() < 1e-11 && f.apply(-1e-12).abs() < 1e-11);
    }

    #[test]
    fn slope_never_zero() {
        let f = LeakyRelu::new(0.2, false).unwrap();
        let x = Matrix::row_vector(&[-3.0, -1e-9, 0.0, 1e-9, 4.0]);
        let (g, _) = f.backward(&x, &Matrix::filled(1, 5, 1.0)).unwrap();
        assert_eq!(g.data(), &[0.2, 0.2, 0.2, 1.0, 1.0]);
        assert!(g.data().iter().all(|&v| v != 0.0));
    }

    #[test]
    fn alpha_range_enforced() {
        for a in [0.0, 1.0, -0.1, 2.0, f64::NAN] {
            assert!(LeakyRelu::new(a, false).is_err());
        }
        assert_eq!(LeakyRelu::parametric().alpha(), 0.01);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::seed(5);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let alpha = rng.uniform(0.01, 0.5).unwrap();
            let f = LeakyRelu::new(alpha, true).unwrap();
            // Keep samples away from the kink so central differences do not straddle it.
            let xs: Vec<f64> = (0..6)
                .map(|_| {
                    let v = rng.uniform(0.01, 2.0).unwrap();
                    if rng.bernoulli(0.5) {
                        v
                    } else {
                        -v
                    }
                })
                .collect();
            let up: Vec<f64> = (0..6).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect();
            let x = Matrix::new(2, 3, xs.clone()).unwrap();
            let upm = Matrix::new(2, 3, up.clone()).unwrap();
            let (gx, ga) = f.backward(&x, &upm).unwrap();
            let probe = |f: &LeakyRelu, x: &[f64]| x.iter().zip(&up).map(|(v, u)| f.apply(*v) * u).sum::<f64>();
            let mut p = xs.clone();
            let nx = numeric_gradient(&mut p, |v| probe(&f, v));
            let mut a = vec![alpha];
            let na = numeric_gradient(&mut a, |v| probe(&LeakyRelu::new(v[0], true).unwrap(), &xs));
            for (an, nu) in gx.data().iter().zip(&nx).chain(std::iter::once((&ga, &na[0]))) {
                worst = worst.max(relative_error(*an, *nu));
            }
        }
        assert!(worst < 1e-5, "worst relative error {worst}");
    }
}
