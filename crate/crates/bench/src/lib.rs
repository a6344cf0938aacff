//! Shared fixtures for the criterion benchmarks.

use geonet_core::graphcore::{gen_er, Graph};
use geonet_core::numkit::{Matrix, Rng};

/// ER(n, p) with a fixed seed per size.
pub fn er_graph(n: usize, p: f64) -> Graph {
    gen_er(n, p, &mut Rng::seed(n as u64)).expect("valid ER parameters")
}

/// Entries uniform in [-1, 1).
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = Rng::seed(seed);
    let data = (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0).expect("valid range")).collect();
    Matrix::new(rows, cols, data).expect("length matches shape")
}

/// `XᵀX / n` of a random `n × d` matrix: symmetric positive semi-definite.
pub fn covariance(n: usize, d: usize, seed: u64) -> Matrix {
    let x = random_matrix(n, d, seed);
    let mut c = x.t_matmul(&x).expect("shapes agree");
    c.scale(1.0 / n as f64);
    c
}
