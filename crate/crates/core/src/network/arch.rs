//! Reference architectures used by the experiments.

use super::{Affine, Layer, Network, NetworkError};
use crate::activations::{ActivationSpec, LeakyRelu, PolynomialLayer, RbfLayer};
use crate::datasets::Dataset;
use crate::numkit::Rng;

/// Hidden width of the small 2-D classifiers.
pub const REFERENCE_HIDDEN: usize = 16;

/// Classifier for the 2-D benchmark sets:
///
/// * `lrelu:a` / `prelu`: affine(in→16) → leaky ReLU → affine(16→classes)
/// * `poly:d`: affine(in→16) → polynomial(16→16, d) → affine(16→classes)
/// * `rbf:n`: n Gaussian units centred on training points with a linear readout
///
/// The polynomial variant needs the leading affine map: a polynomial layer
/// on raw coordinates is a sum of per-coordinate powers and cannot express
/// the `x₁·x₂` interaction XOR depends on.
pub fn reference_classifier(spec: ActivationSpec, train: &Dataset, rng: &mut Rng) -> Result<Network, NetworkError> {
    let (inputs, classes) = (train.n_features(), train.n_classes());
    let h = REFERENCE_HIDDEN;
    let layers = match spec {
        ActivationSpec::LRelu { alpha } => vec![
            Layer::affine(Affine::init(inputs, h, rng)),
            Layer::leaky_relu(LeakyRelu::new(alpha, false)?),
            Layer::affine(Affine::init(h, classes, rng)),
        ],
        ActivationSpec::PRelu => vec![
            Layer::affine(Affine::init(inputs, h, rng)),
            Layer::leaky_relu(LeakyRelu::parametric()),
            Layer::affine(Affine::init(h, classes, rng)),
        ],
        ActivationSpec::Poly { degree } => vec![
            Layer::affine(Affine::init(inputs, h, rng)),
            Layer::polynomial(PolynomialLayer::init(h, h, degree, rng)?),
            Layer::affine(Affine::init(h, classes, rng)),
        ],
        ActivationSpec::Rbf { units } => vec![Layer::rbf(RbfLayer::init_centers(train, units, classes, rng)?)],
    };
    Network::new(layers)
}

/// `inputs → hidden (leaky ReLU, α = 0.01) → classes`.
pub fn mlp(inputs: usize, hidden: usize, classes: usize, rng: &mut Rng) -> Network {
    Network::new(vec![
        Layer::affine(Affine::init(inputs, hidden, rng)),
        Layer::leaky_relu(LeakyRelu::new(LeakyRelu::DEFAULT_ALPHA, false).expect("default slope is valid")),
        Layer::affine(Affine::init(hidden, classes, rng)),
    ])
    .expect("mlp widths chain")
}

/// The MNIST stand-in: 784 → 128 → 10 (input width overridable for
/// reduced features).
pub fn mnist_mlp(inputs: usize, rng: &mut Rng) -> Network {
    mlp(inputs, 128, 10, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::gen_moons;

    #[test]
    fn reference_shapes() {
        let mut rng = Rng::seed(0);
        let d = gen_moons(100, 0.1, &mut rng).unwrap();
        for (s, layers) in [("poly:3", 3), ("lrelu:0.01", 3), ("prelu", 3), ("rbf:8", 1)] {
            let net = reference_classifier(s.parse().unwrap(), &d, &mut rng).unwrap();
            assert_eq!(net.layers.len(), layers, "{s}");
            assert_eq!((net.input_dim(), net.output_dim()), (Some(2), Some(2)));
        }
        let m = mnist_mlp(784, &mut rng);
        assert_eq!(m.weight_count(), 784 * 128 + 128 * 10);
    }
}
