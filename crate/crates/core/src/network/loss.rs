use super::NetworkError;
use crate::numkit::{LinalgError, Matrix};

/// Row-wise softmax, shifted by the row maximum.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut p = logits.clone();
    let cols = p.cols();
    if cols == 0 {
        return p;
    }
    for row in p.data_mut().chunks_exact_mut(cols) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    p
}

/// Mean softmax cross-entropy over the batch and its gradient with respect
/// to the logits.
pub fn cross_entropy_loss(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix), NetworkError> {
    let (n, classes) = logits.shape();
    if labels.len() != n {
        return Err(LinalgError::Shape {
            op: "cross_entropy labels",
            left: logits.shape(),
            right: (labels.len(), 1),
        }
        .into());
    }
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(NetworkError::LabelOutOfRange { index, label, classes });
    }
    let mut grad = Matrix::zeros(n, classes);
    let mut loss = 0.0;
    for (i, (row, &label)) in logits.iter_rows().zip(labels).enumerate() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += log_sum - (row[label] - max);
        let g = grad.row_mut(i);
        for (c, v) in row.iter().enumerate() {
            g[c] = (v - max - log_sum).exp();
        }
        g[label] -= 1.0;
    }
    let scale = 1.0 / n.max(1) as f64;
    grad.scale(scale);
    Ok((loss * scale, grad))
}

/// Mean squared reconstruction error `(1/n) Σ ‖xᵢ − x̂ᵢ‖²` over the batch
/// rows and its gradient with respect to `prediction`.
pub fn mse_loss(prediction: &Matrix, target: &Matrix) -> Result<(f64, Matrix), NetworkError> {
    let mut grad = prediction.sub(target)?;
    let n = prediction.rows().max(1) as f64;
    let loss = grad.data().iter().map(|d| d * d).sum::<f64>() / n;
    grad.scale(2.0 / n);
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::gradcheck::numeric_gradient;
    use crate::numkit::Rng;

    #[test]
    fn uniform_logits_give_log_classes() {
        for c in [2usize, 3, 10] {
            let (loss, _) = cross_entropy_loss(&Matrix::filled(4, c, 0.7), &[0, 1, 0, 1]).unwrap();
            assert!((loss - (c as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn large_margin_gives_near_zero_loss() {
        let logits = Matrix::from_rows(&[[50.0, 0.0, 0.0], [0.0, 0.0, 80.0]]).unwrap();
        let (loss, _) = cross_entropy_loss(&logits, &[0, 2]).unwrap();
        assert!((0.0..1e-20).contains(&loss));
        let huge = Matrix::from_rows(&[[1e4, -1e4]]).unwrap();
        assert!(cross_entropy_loss(&huge, &[1]).unwrap().0.is_finite());
    }

    #[test]
    fn label_range_checked() {
        assert!(matches!(
            cross_entropy_loss(&Matrix::zeros(2, 3), &[0, 3]),
            Err(NetworkError::LabelOutOfRange { index: 1, label: 3, classes: 3 })
        ));
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let mut rng = Rng::seed(6);
        for _ in 0..20 {
            let logits: Vec<f64> = (0..12).map(|_| rng.uniform(-3.0, 3.0).unwrap()).collect();
            let labels: Vec<usize> = (0..3).map(|_| rng.index(4)).collect();
            let (_, grad) = cross_entropy_loss(&Matrix::new(3, 4, logits.clone()).unwrap(), &labels).unwrap();
            let mut p = logits;
            let numeric = numeric_gradient(&mut p, |v| {
                cross_entropy_loss(&Matrix::new(3, 4, v.to_vec()).unwrap(), &labels).unwrap().0
            });
            for (a, n) in grad.data().iter().zip(&numeric) {
                assert!((a - n).abs() < 1e-6, "{a} vs {n}");
            }
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let p = softmax(&Matrix::from_rows(&[[1.0, 2.0, 3.0], [-1e3, 0.0, 1e3]]).unwrap());
        for row in p.iter_rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mse_matches_definition_and_gradient() {
        let pred = Matrix::from_rows(&[[1.0, 2.0], [0.0, -1.0]]).unwrap();
        let target = Matrix::from_rows(&[[0.0, 2.0], [1.0, 1.0]]).unwrap();
        let (loss, grad) = mse_loss(&pred, &target).unwrap();
        // (1 + 0 + 1 + 4) / 2
        assert_eq!(loss, 3.0);
        let mut p = pred.data().to_vec();
        let numeric = numeric_gradient(&mut p, |v| mse_loss(&Matrix::new(2, 2, v.to_vec()).unwrap(), &target).unwrap().0);
        for (a, n) in grad.data().iter().zip(&numeric) {
            assert!((a - n).abs() < 1e-8, "{a} vs {n}");
        }
        assert_eq!(mse_loss(&target, &target).unwrap().0, 0.0);
    }
}
