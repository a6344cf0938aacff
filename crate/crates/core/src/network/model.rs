//! Versioned JSON model documents.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_mask, Affine, Layer, LayerKind, Network, NetworkError};
use crate::activations::{LeakyRelu, PolynomialLayer, RbfLayer};
use crate::numkit::Matrix;

pub const MODEL_VERSION: u32 = 1;
const NETWORK_FORMAT: &str = "geonet-network";

#[derive(Serialize, Deserialize)]
struct NetworkDocument {
    format: String,
    version: u32,
    layers: Vec<Layer>,
}

/// Checks a deserialised matrix: declared shape matches data and every entry is finite.
pub(crate) fn check_matrix(what: &str, m: &Matrix) -> Result<(), NetworkError> {
    Matrix::new(m.rows(), m.cols(), m.data().to_vec())
        .map(|_| ())
        .map_err(|e| NetworkError::Format(format!("{what}: {e}")))
}

pub(crate) fn check_header(format: &str, version: u32, expected: &str) -> Result<(), NetworkError> {
    if format != expected {
        return Err(NetworkError::Format(format!("expected format '{expected}', found '{format}'")));
    }
    if version != MODEL_VERSION {
        return Err(NetworkError::Format(format!(
            "unsupported version {version} (this build reads {MODEL_VERSION})"
        )));
    }
    Ok(())
}

fn check_layer(index: usize, layer: &Layer) -> Result<(), NetworkError> {
    let what = |part: &str| format!("layer {index} {part}");
    match &layer.kind {
        LayerKind::Affine(a) => {
            check_matrix(&what("weights"), &a.weights)?;
            Affine::new(a.weights.clone(), a.bias.clone())?;
        }
        LayerKind::Polynomial(p) => {
            check_matrix(&what("weights"), &p.weights)?;
            PolynomialLayer::new(p.degree(), p.weights.clone(), p.bias.clone())?;
        }
        LayerKind::Rbf(r) => {
            check_matrix(&what("centers"), &r.centers)?;
            check_matrix(&what("readout"), &r.readout)?;
            RbfLayer::new(r.centers.clone(), r.sigmas.clone(), r.readout.clone(), r.readout_bias.clone())?;
        }
        LayerKind::LeakyRelu(l) => {
            LeakyRelu::new(l.alpha(), l.learnable)?;
        }
    }
    if let Some(mask) = &layer.mask {
        check_matrix(&what("mask"), mask)?;
        check_mask(index, layer, mask)?;
    }
    Ok(())
}

impl Network {
    pub fn to_json(&self) -> Result<String, NetworkError> {
        let doc = NetworkDocument {
            format: NETWORK_FORMAT.into(),
            version: MODEL_VERSION,
            layers: self.layers.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses and validates a model document: header, parameter shapes,
    /// masks and the layer shape chain.
    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let doc: NetworkDocument = serde_json::from_str(text)?;
        check_header(&doc.format, doc.version, NETWORK_FORMAT)?;
        for (i, layer) in doc.layers.iter().enumerate() {
            check_layer(i, layer)?;
        }
        let mut net = Network::new(doc.layers)?;
        net.apply_masks();
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NetworkError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|source| NetworkError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetworkError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| NetworkError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::ActivationSpec;
    use crate::datasets::gen_circles;
    use crate::network::reference_classifier;
    use crate::numkit::Rng;

    #[test]
    fn every_reference_model_round_trips() {
        let mut rng = Rng::seed(5);
        let d = gen_circles(60, 0.5, 1.0, 0.05, &mut rng).unwrap();
        for spec in ["poly:2", "rbf:5", "lrelu:0.1", "prelu"] {
            let mut net = reference_classifier(spec.parse::<ActivationSpec>().unwrap(), &d, &mut rng).unwrap();
            let shape = net.layers[0].weights().unwrap().shape();
            let mut mask = Matrix::filled(shape.0, shape.1, 1.0);
            mask.set(0, 0, 0.0);
            net.set_mask(0, mask).unwrap();
            let back = Network::from_json(&net.to_json().unwrap()).unwrap();
            assert_eq!(back, net, "{spec}");
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let net = crate::network::mnist_mlp(20, &mut Rng::seed(1));
        net.save(&path).unwrap();
        assert_eq!(Network::load(&path).unwrap(), net);
    }

    fn tweak(json: &str, f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(json).unwrap();
        f(&mut v);
        v.to_string()
    }

    #[test]
    fn malformed_documents_rejected() {
        let net = crate::network::mlp(3, 4, 2, &mut Rng::seed(2));
        let json = net.to_json().unwrap();
        let bad_version = tweak(&json, |v| v["version"] = 99.into());
        assert!(matches!(Network::from_json(&bad_version), Err(NetworkError::Format(_))));
        let bad_format = tweak(&json, |v| v["format"] = "pca".into());
        assert!(matches!(Network::from_json(&bad_format), Err(NetworkError::Format(_))));
        let short = tweak(&json, |v| {
            v["layers"][0]["kind"]["weights"]["data"].as_array_mut().unwrap().pop();
        });
        assert!(matches!(Network::from_json(&short), Err(NetworkError::Format(_))));
        let broken_chain = tweak(&json, |v| {
            v["layers"][2]["kind"]["weights"] = serde_json::json!({"rows": 5, "cols": 2, "data": vec![0.0; 10]});
        });
        assert!(matches!(Network::from_json(&broken_chain), Err(NetworkError::ShapeChain { .. })));
        let bad_alpha = tweak(&json, |v| v["layers"][1]["kind"]["alpha"] = 2.0.into());
        assert!(Network::from_json(&bad_alpha).is_err());
        assert!(matches!(Network::from_json("{"), Err(NetworkError::Json(_))));
    }
}
