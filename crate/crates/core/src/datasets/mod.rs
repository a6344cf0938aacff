//! Synthetic benchmark datasets, the IDX loader and stratified splitting.

mod idx;
mod synthetic;

pub use idx::{load_idx, load_mnist_dir, write_idx, IdxError, MnistSplit};
pub use synthetic::{gen_circles, gen_gaussian_mixture, gen_moons, gen_xor, SyntheticKind};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::numkit::{LinalgError, Matrix, Rng};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid dataset parameter: {0}")]
    InvalidParameter(String),
    #[error("label {label} at sample {index} is outside 0..{n_classes}")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        n_classes: usize,
    },
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("class {class} has {count} sample(s); stratified split needs at least 2")]
    ClassTooSmall { class: usize, count: usize },
    #[error(transparent)]
    Idx(#[from] IdxError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Labelled feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    features: Matrix,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    /// `n_classes` defaults to `max(label) + 1` when `None`.
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        labels: Vec<usize>,
        n_classes: Option<usize>,
    ) -> Result<Self, DataError> {
        if features.rows() != labels.len() {
            return Err(DataError::LengthMismatch {
                rows: features.rows(),
                labels: labels.len(),
            });
        }
        if !features.is_finite() {
            return Err(DataError::InvalidParameter("non-finite feature value".into()));
        }
        let inferred = labels.iter().max().map_or(0, |m| m + 1);
        let n_classes = n_classes.unwrap_or(inferred);
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
            return Err(DataError::LabelOutOfRange {
                index,
                label,
                n_classes,
            });
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
            n_classes,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// The first `n` samples (or all of them).
    pub fn head(&self, n: usize) -> Dataset {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&idx)
    }

    /// Same labels, new features (e.g. after a projection).
    pub fn with_features(&self, features: Matrix) -> Result<Dataset, DataError> {
        Dataset::new(
            self.name.clone(),
            features,
            self.labels.clone(),
            Some(self.n_classes),
        )
    }
}

/// Stratified, shuffled train/test split.
///
/// Each class contributes `round(fraction · count)` samples to the training
/// side, clamped so both sides keep at least one sample of it.
pub fn split(d: &Dataset, train_fraction: f64, rng: &mut Rng) -> Result<(Dataset, Dataset), DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::InvalidParameter(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in d.labels().iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (&class, members) in &mut by_class {
        if members.len() < 2 {
            return Err(DataError::ClassTooSmall {
                class,
                count: members.len(),
            });
        }
        rng.shuffle(members);
        let take = ((train_fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..take]);
        test.extend_from_slice(&members[take..]);
    }
    rng.shuffle(&mut train);
    rng.shuffle(&mut test);
    Ok((d.subset(&train), d.subset(&test)))
}
