//! Dense linear algebra, deterministic random numbers and a symmetric
//! eigensolver. Everything else in the crate sits on top of this.

mod eigen;
mod matrix;
mod rng;

pub use eigen::{sym_eigen, sym_eigen_jacobi, SymEigen};
pub use matrix::{dot, Matrix};
pub use rng::Rng;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("{op}: shape mismatch {}x{} vs {}x{}", left.0, left.1, right.0, right.1)]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("data length {len} does not match {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, len: usize },
    #[error("ragged rows: expected {expected} columns, found {found}")]
    RaggedRows { expected: usize, found: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },
    #[error("{0}")]
    InvalidArgument(String),
}

impl LinalgError {
    pub(crate) fn shape(op: &'static str, a: &Matrix, b: &Matrix) -> Self {
        LinalgError::Shape {
            op,
            left: a.shape(),
            right: b.shape(),
        }
    }
}
