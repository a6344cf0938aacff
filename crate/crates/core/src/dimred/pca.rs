use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DimredError;
use crate::network::MODEL_VERSION;
use crate::numkit::{sym_eigen, LinalgError, Matrix};

const PCA_FORMAT: &str = "geonet-pca";

/// Fitted principal-component projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `features × k`, orthonormal columns.
    pub components: Matrix,
    /// Every covariance eigenvalue, descending. Round-off negatives are
    /// clamped to zero.
    pub eigenvalues: Vec<f64>,
}

/// Centres `data`, forms `C = (1/n)·XᵀX`, and keeps the top `k` eigenvectors.
pub fn pca_fit(data: &Matrix, k: usize) -> Result<PcaModel, DimredError> {
    let (n, features) = data.shape();
    if k == 0 || k > features {
        return Err(DimredError::InvalidK { k, features });
    }
    if n < 2 {
        return Err(DimredError::TooFewSamples { needed: 2, found: n });
    }
    let mean = data.column_means();
    let mut centred = data.clone();
    for row in centred.data_mut().chunks_exact_mut(features) {
        for (v, m) in row.iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut cov = centred.t_matmul(&centred)?;
    cov.scale(1.0 / n as f64);
    let eig = sym_eigen(&cov)?;
    Ok(PcaModel {
        mean,
        components: eig.vectors.leading_columns(k),
        eigenvalues: eig.values.iter().map(|&l| l.max(0.0)).collect(),
    })
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.cols()
    }

    pub fn features(&self) -> usize {
        self.components.rows()
    }

    /// `Σ_{i<k} λᵢ / Σ λᵢ` for the retained `k`.
    pub fn explained_variance_ratio(&self) -> f64 {
        self.ratio_for(self.k())
    }

    /// Explained-variance ratio had `k` components been kept. A data set
    /// with zero total variance counts as fully explained.
    pub fn ratio_for(&self, k: usize) -> f64 {
        let total: f64 = self.eigenvalues.iter().sum();
        if total <= 0.0 {
            return 1.0;
        }
        let top: f64 = self.eigenvalues.iter().take(k).sum();
        (top / total).min(1.0)
    }

    /// `Z = (X − mean)·W`
    pub fn transform(&self, x: &Matrix) -> Result<Matrix, DimredError> {
        if x.cols() != self.features() {
            return Err(LinalgError::shape("pca_transform", x, &self.components).into());
        }
        let mut centred = x.clone();
        let f = self.features();
        for row in centred.data_mut().chunks_exact_mut(f) {
            for (v, m) in row.iter_mut().zip(&self.mean) {
                *v -= m;
            }
        }
        Ok(centred.matmul(&self.components)?)
    }

    /// `X̂ = Z·Wᵀ + mean`
    pub fn inverse(&self, z: &Matrix) -> Result<Matrix, DimredError> {
        let mut x = z.matmul_t(&self.components).map_err(|_| LinalgError::shape("pca_inverse", z, &self.components))?;
        x.add_row_vector(&self.mean)?;
        Ok(x)
    }

    pub fn to_json(&self) -> Result<String, DimredError> {
        Ok(serde_json::to_string(&PcaDocument {
            format: PCA_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self, DimredError> {
        let doc: PcaDocument = serde_json::from_str(text)?;
        if doc.format != PCA_FORMAT || doc.version != MODEL_VERSION {
            return Err(DimredError::Format(format!(
                "expected {PCA_FORMAT} v{MODEL_VERSION}, found {} v{}",
                doc.format, doc.version
            )));
        }
        let m = doc.model;
        let c = &m.components;
        Matrix::new(c.rows(), c.cols(), c.data().to_vec()).map_err(|e| DimredError::Format(format!("components: {e}")))?;
        if m.mean.len() != c.rows() || m.eigenvalues.len() != c.rows() || c.cols() == 0 {
            return Err(DimredError::Format(format!(
                "inconsistent shapes: mean {}, components {:?}, {} eigenvalues",
                m.mean.len(),
                c.shape(),
                m.eigenvalues.len()
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DimredError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|source| DimredError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DimredError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DimredError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct PcaDocument {
    format: String,
    version: u32,
    model: PcaModel,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Rng;
    use proptest::prelude::*;

    fn random(n: usize, f: usize, rng: &mut Rng) -> Matrix {
        Matrix::new(n, f, (0..n * f).map(|_| rng.gaussian(0.0, 1.0).unwrap()).collect()).unwrap()
    }

    #[test]
    fn points_on_the_diagonal() {
        let data = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [-3.0, -3.0], [5.0, 5.0]]).unwrap();
        let m = pca_fit(&data, 1).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((m.components.get(0, 0) - h).abs() < 1e-12);
        assert!((m.components.get(1, 0) - h).abs() < 1e-12);
        assert!((m.explained_variance_ratio() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_rank_round_trip() {
        let mut rng = Rng::seed(3);
        let x = random(40, 6, &mut rng);
        let m = pca_fit(&x, 6).unwrap();
        let back = m.inverse(&m.transform(&x).unwrap()).unwrap();
        assert!(back.max_abs_diff(&x) < 1e-8);
        assert!((m.explained_variance_ratio() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_maps_to_origin() {
        let mut rng = Rng::seed(4);
        let x = random(30, 5, &mut rng);
        let m = pca_fit(&x, 3).unwrap();
        let z = m.transform(&Matrix::row_vector(&m.mean)).unwrap();
        assert!(z.data().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn projected_variance_equals_eigenvalue() {
        let mut rng = Rng::seed(5);
        let mut x = random(200, 4, &mut rng);
        // Anisotropic scaling so eigenvalues are well separated.
        for row in x.data_mut().chunks_exact_mut(4) {
            for (v, s) in row.iter_mut().zip([5.0, 2.0, 1.0, 0.3]) {
                *v *= s;
            }
        }
        let m = pca_fit(&x, 4).unwrap();
        let z = m.transform(&x).unwrap();
        for i in 0..4 {
            let var = z.column(i).iter().map(|v| v * v).sum::<f64>() / 200.0;
            assert!((var - m.eigenvalues[i]).abs() <= 1e-6 * m.eigenvalues[i], "component {i}");
        }
    }

    #[test]
    fn subspace_data_has_vanishing_tail() {
        let mut rng = Rng::seed(6);
        let basis = random(2, 6, &mut rng);
        let coeffs = random(50, 2, &mut rng);
        let mut x = coeffs.matmul(&basis).unwrap();
        x.add_row_vector(&[1.0, -2.0, 3.0, 0.5, 0.0, 7.0]).unwrap();
        let m = pca_fit(&x, 6).unwrap();
        for &l in &m.eigenvalues[2..] {
            assert!(l < 1e-8 * m.eigenvalues[0]);
        }
    }

    #[test]
    fn invalid_arguments() {
        let x = Matrix::zeros(5, 3);
        assert!(matches!(pca_fit(&x, 0), Err(DimredError::InvalidK { k: 0, features: 3 })));
        assert!(matches!(pca_fit(&x, 4), Err(DimredError::InvalidK { .. })));
        assert!(matches!(pca_fit(&Matrix::zeros(1, 3), 1), Err(DimredError::TooFewSamples { .. })));
        let m = pca_fit(&Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap(), 1).unwrap();
        assert!(m.transform(&Matrix::zeros(1, 3)).is_err());
        assert!(m.inverse(&Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut rng = Rng::seed(8);
        let m = pca_fit(&random(20, 4, &mut rng), 2).unwrap();
        assert_eq!(PcaModel::from_json(&m.to_json().unwrap()).unwrap(), m);
        let bad = m.to_json().unwrap().replace("geonet-pca", "geonet-network");
        assert!(matches!(PcaModel::from_json(&bad), Err(DimredError::Format(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn ratio_is_monotone_in_k(seed in any::<u64>(), n in 3usize..30, f in 1usize..8) {
            let mut rng = Rng::seed(seed);
            let m = pca_fit(&random(n, f, &mut rng), f).unwrap();
            let ratios: Vec<f64> = (1..=f).map(|k| m.ratio_for(k)).collect();
            for w in ratios.windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
            prop_assert!((ratios[f - 1] - 1.0).abs() < 1e-12);
            prop_assert!(m.eigenvalues.iter().all(|&l| l >= -1e-10));
        }
    }
}
