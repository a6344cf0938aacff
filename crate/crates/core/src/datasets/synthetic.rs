use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::{DataError, Dataset};
use crate::numkit::{Matrix, Rng};

/// The two-dimensional benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    Xor,
    Circles,
    Moons,
}

impl SyntheticKind {
    /// Generates the dataset with its default geometry: n = 400, XOR noise 0.1,
    /// circle radii 0.5 / 1.0 with noise 0.05, moons noise 0.1.
    pub fn generate_default(self, n: usize, rng: &mut Rng) -> Result<Dataset, DataError> {
        match self {
            SyntheticKind::Xor => gen_xor(n, 0.1, rng),
            SyntheticKind::Circles => gen_circles(n, 0.5, 1.0, 0.05, rng),
            SyntheticKind::Moons => gen_moons(n, 0.1, rng),
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticKind::Xor => "xor",
            SyntheticKind::Circles => "circles",
            SyntheticKind::Moons => "moons",
        })
    }
}

impl FromStr for SyntheticKind {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xor" => Ok(SyntheticKind::Xor),
            "circles" => Ok(SyntheticKind::Circles),
            "moons" => Ok(SyntheticKind::Moons),
            other => Err(DataError::InvalidParameter(format!(
                "unknown dataset '{other}' (expected xor, circles or moons)"
            ))),
        }
    }
}

fn check_noise(noise_std: f64) -> Result<(), DataError> {
    if noise_std >= 0.0 && noise_std.is_finite() {
        Ok(())
    } else {
        Err(DataError::InvalidParameter(format!("noise_std must be >= 0, got {noise_std}")))
    }
}

/// Noisy copies of the four XOR corners; `(0,1)` and `(1,0)` are class 1.
pub fn gen_xor(n: usize, noise_std: f64, rng: &mut Rng) -> Result<Dataset, DataError> {
    if n < 4 || !n.is_multiple_of(4) {
        return Err(DataError::InvalidParameter(format!(
            "xor needs n >= 4 and divisible by 4, got {n}"
        )));
    }
    check_noise(noise_std)?;
    const CORNERS: [([f64; 2], usize); 4] = [([0.0, 0.0], 0), ([1.0, 1.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1)];
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (corner, label) = CORNERS[i % 4];
        for c in corner {
            data.push(c + rng.gaussian(0.0, noise_std)?);
        }
        labels.push(label);
    }
    Dataset::new("xor", Matrix::new(n, 2, data)?, labels, Some(2))
}

/// Two concentric rings: class 0 on the outer radius, class 1 on the inner.
pub fn gen_circles(
    n: usize,
    inner_radius: f64,
    outer_radius: f64,
    noise_std: f64,
    rng: &mut Rng,
) -> Result<Dataset, DataError> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(DataError::InvalidParameter(format!("circles needs a positive even n, got {n}")));
    }
    if !(inner_radius > 0.0 && inner_radius < outer_radius && outer_radius.is_finite()) {
        return Err(DataError::InvalidParameter(format!(
            "circles needs 0 < inner < outer, got {inner_radius} / {outer_radius}"
        )));
    }
    check_noise(noise_std)?;
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let radius = if label == 0 { outer_radius } else { inner_radius };
        let angle = rng.uniform(0.0, 2.0 * PI)?;
        let r = radius + rng.gaussian(0.0, noise_std)?;
        data.push(r * angle.cos());
        data.push(r * angle.sin());
        labels.push(label);
    }
    Dataset::new("circles", Matrix::new(n, 2, data)?, labels, Some(2))
}

/// Two interleaving half circles. Class 0 is the upper arc of the unit circle;
/// class 1 is the lower arc `(1 − cos t, 0.5 − sin t)`.
pub fn gen_moons(n: usize, noise_std: f64, rng: &mut Rng) -> Result<Dataset, DataError> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(DataError::InvalidParameter(format!("moons needs a positive even n, got {n}")));
    }
    check_noise(noise_std)?;
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let t = rng.uniform(0.0, PI)?;
        let (x, y) = if label == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        data.push(x + rng.gaussian(0.0, noise_std)?);
        data.push(y + rng.gaussian(0.0, noise_std)?);
        labels.push(label);
    }
    Dataset::new("moons", Matrix::new(n, 2, data)?, labels, Some(2))
}

/// Isotropic Gaussian blobs, one class per center, samples assigned round-robin.
pub fn gen_gaussian_mixture<P: AsRef<[f64]>>(
    n: usize,
    centers: &[P],
    std: f64,
    rng: &mut Rng,
) -> Result<Dataset, DataError> {
    if centers.is_empty() {
        return Err(DataError::InvalidParameter("mixture needs at least one center".into()));
    }
    if n == 0 {
        return Err(DataError::InvalidParameter("mixture needs n > 0".into()));
    }
    check_noise(std)?;
    let dim = centers[0].as_ref().len();
    if dim == 0 || centers.iter().any(|c| c.as_ref().len() != dim) {
        return Err(DataError::InvalidParameter("mixture centers must share a positive dimension".into()));
    }
    let mut data = Vec::with_capacity(dim * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % centers.len();
        for &c in centers[label].as_ref() {
            data.push(c + rng.gaussian(0.0, std)?);
        }
        labels.push(label);
    }
    Dataset::new("mixture", Matrix::new(n, dim, data)?, labels, Some(centers.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_xor_is_the_four_corners() {
        let d = gen_xor(4, 0.0, &mut Rng::seed(0)).unwrap();
        let rows: Vec<(Vec<f64>, usize)> = d
            .features()
            .iter_rows()
            .map(|r| r.to_vec())
            .zip(d.labels().iter().copied())
            .collect();
        assert_eq!(
            rows,
            vec![
                (vec![0.0, 0.0], 0),
                (vec![1.0, 1.0], 0),
                (vec![0.0, 1.0], 1),
                (vec![1.0, 0.0], 1)
            ]
        );
    }

    #[test]
    fn xor_class_balance() {
        let d = gen_xor(400, 0.1, &mut Rng::seed(1)).unwrap();
        assert_eq!(d.class_counts(), vec![200, 200]);
        assert!(gen_xor(10, 0.1, &mut Rng::seed(1)).is_err());
    }

    #[test]
    fn noiseless_xor_defeats_every_halfplane() {
        let d = gen_xor(4, 0.0, &mut Rng::seed(0)).unwrap();
        let mut best = 0usize;
        // Every halfplane induces one of finitely many dichotomies of the four
        // points; a dense sweep of directions and offsets reaches all of them.
        for a in 0..360 {
            let theta = (a as f64).to_radians();
            let (wx, wy) = (theta.cos(), theta.sin());
            for b in -30..=30 {
                let bias = b as f64 * 0.05;
                let correct = d
                    .features()
                    .iter_rows()
                    .zip(d.labels())
                    .filter(|(x, &l)| ((wx * x[0] + wy * x[1] + bias > 0.0) as usize) == l)
                    .count();
                best = best.max(correct);
            }
        }
        assert_eq!(best, 3);
    }

    #[test]
    fn noiseless_circles_sit_on_their_radii() {
        let d = gen_circles(200, 0.5, 1.0, 0.0, &mut Rng::seed(2)).unwrap();
        for (x, &l) in d.features().iter_rows().zip(d.labels()) {
            let r = x[0].hypot(x[1]);
            let expected = if l == 0 { 1.0 } else { 0.5 };
            assert!((r - expected).abs() < 1e-12);
        }
        // A radius threshold between the rings classifies perfectly.
        let acc = d
            .features()
            .iter_rows()
            .zip(d.labels())
            .filter(|(x, &l)| ((x[0].hypot(x[1]) < 0.75) as usize) == l)
            .count();
        assert_eq!(acc, 200);
    }

    #[test]
    fn circles_parameter_validation() {
        let mut r = Rng::seed(0);
        assert!(gen_circles(10, 1.0, 0.5, 0.0, &mut r).is_err());
        assert!(gen_circles(10, 0.0, 0.5, 0.0, &mut r).is_err());
        assert!(gen_circles(11, 0.5, 1.0, 0.0, &mut r).is_err());
    }

    #[test]
    fn moons_balance() {
        let d = gen_moons(200, 0.1, &mut Rng::seed(7)).unwrap();
        assert_eq!(d.class_counts(), vec![100, 100]);
    }

    #[test]
    fn single_center_mixture() {
        let d = gen_gaussian_mixture(30, &[[1.0, 2.0]], 0.3, &mut Rng::seed(3)).unwrap();
        assert!(d.labels().iter().all(|&l| l == 0));
        let empty: [[f64; 2]; 0] = [];
        assert!(gen_gaussian_mixture(30, &empty, 0.3, &mut Rng::seed(3)).is_err());
    }

    #[test]
    fn generators_are_pure_in_seed() {
        for kind in [SyntheticKind::Xor, SyntheticKind::Circles, SyntheticKind::Moons] {
            let a = kind.generate_default(400, &mut Rng::seed(5)).unwrap();
            let b = kind.generate_default(400, &mut Rng::seed(5)).unwrap();
            assert_eq!(a, b);
            assert_eq!(kind.to_string().parse::<SyntheticKind>().unwrap(), kind);
        }
    }
}
