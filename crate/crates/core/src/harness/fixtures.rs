//! Reference problems used by the verification suite and the tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::affine_model::{validate, AffineProblem, ValidatedProblem};
use crate::numlin::Matrix;

/// Coordinate slice `x₂ = c` with `k = 1`.
pub fn fix_a(c: f64) -> ValidatedProblem {
    validate(AffineProblem::new(Matrix::from_rows(&[vec![0.0, 1.0]]), vec![c], 1).unwrap())
        .expect("fixture A validates")
}

/// Oblique slice `3x₁ + 4x₂ = 5` with `k = 1`.
pub fn fix_b() -> ValidatedProblem {
    validate(AffineProblem::new(Matrix::from_rows(&[vec![3.0, 4.0]]), vec![5.0], 1).unwrap())
        .expect("fixture B validates")
}

/// A random problem with Gaussian `Q` of support width `s`, `m` rows and
/// cylinder dimension `k`; redrawn until it validates.
pub fn random_problem<R: Rng>(rng: &mut R, s: usize, m: usize, k: usize) -> ValidatedProblem {
    loop {
        let q: Vec<f64> = (0..m * s).map(|_| rng.sample(StandardNormal)).collect();
        let w0: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let problem = AffineProblem::new(Matrix::new(m, s, q).unwrap(), w0, k).unwrap();
        if let Ok(v) = validate(problem) {
            return v;
        }
    }
}

/// A random `k × k` orthogonal matrix (QR of a Gaussian matrix).
pub fn random_orthogonal<R: Rng>(rng: &mut R, k: usize) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    while cols.len() < k {
        let mut v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        for c in &cols {
            let p: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= p * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-8 {
            cols.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    let mut o = Matrix::zeros(k, k);
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in c.iter().enumerate() {
            o[(i, j)] = *v;
        }
    }
    o
}
