//! Gram data of the coordinate projection restricted to `ker Q_N`.
//!
//! With `K` an orthonormal basis of `ker Q_N` and `M` its first `k` rows,
//! `L_{0,N} L_{0,N}* = M Mᵀ = G_N`. Everything downstream depends on the
//! basis only through `G_N`, so the arbitrary choice of `K` never leaks.

use crate::affine_model::{Truncation, ValidatedProblem};
use crate::error::{Error, Result};
use crate::numlin::{self, Matrix};

/// Orthonormal basis of `ker Q_N`, stored as `blockdiag(dense, I)`.
///
/// Coordinates past the stable width are unconstrained, so their part of the
/// kernel is the identity and is never materialized.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    dense: Matrix,
    level: Truncation,
}

impl KernelBasis {
    pub fn dense(&self) -> &Matrix {
        &self.dense
    }

    pub fn level(&self) -> Truncation {
        self.level
    }

    /// Dimension of the identity block, `None` when infinite.
    pub fn tail_dim(&self) -> Option<usize> {
        match self.level {
            Truncation::Finite(n) => Some(n - self.dense.rows()),
            Truncation::Infinite => None,
        }
    }

    /// Columns `N - rank Q_N` for finite `N`.
    pub fn dim(&self) -> Option<usize> {
        self.tail_dim().map(|t| t + self.dense.cols())
    }

    /// Materializes the full `N × (N - m)` basis.
    pub fn to_matrix(&self) -> Option<Matrix> {
        let tail = self.tail_dim()?;
        let (r, c) = (self.dense.rows(), self.dense.cols());
        let mut out = Matrix::zeros(r + tail, c + tail);
        for i in 0..r {
            for j in 0..c {
                out[(i, j)] = self.dense[(i, j)];
            }
        }
        for t in 0..tail {
            out[(r + t, c + t)] = 1.0;
        }
        Some(out)
    }
}

pub(crate) fn kernel_basis(validated: &ValidatedProblem, n: Truncation) -> KernelBasis {
    let q = validated.problem().truncated_q(n);
    KernelBasis {
        dense: numlin::kernel_onb(&q, validated.tol()),
        level: n,
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionData {
    level: Truncation,
    g: Matrix,
    log_det_l0: f64,
    chol: Matrix,
    kernel: KernelBasis,
}

impl ProjectionData {
    pub fn level(&self) -> Truncation {
        self.level
    }

    /// `G_N = L_{0,N} L_{0,N}*`.
    pub fn gram(&self) -> &Matrix {
        &self.g
    }

    /// `ln |det L_{0,N}| = ½ ln det G_N`.
    pub fn log_det_l0(&self) -> f64 {
        self.log_det_l0
    }

    /// Lower-triangular `C` with `C Cᵀ = G_N`.
    pub fn chol(&self) -> &Matrix {
        &self.chol
    }

    pub fn kernel(&self) -> &KernelBasis {
        &self.kernel
    }

    pub fn k(&self) -> usize {
        self.g.rows()
    }
}

pub fn build_projection(validated: &ValidatedProblem, n: Truncation) -> Result<ProjectionData> {
    validated.check_level(n)?;
    let kernel = kernel_basis(validated, n);
    let k = validated.k();
    let g = kernel.dense().top_rows(k).gram();
    let chol = numlin::cholesky(&g)?;
    let log_det_l0 = (0..k).map(|i| chol[(i, i)].ln()).sum();
    Ok(ProjectionData {
        level: n,
        g,
        log_det_l0,
        chol,
        kernel,
    })
}

/// `‖L_{0,N}⁻¹ x‖² = ⟨G_N⁻¹ x, x⟩`: squared norm of the smallest point of
/// `ker Q_N` whose first `k` coordinates are `x`.
pub fn preimage_norm_sq(pd: &ProjectionData, x: &[f64]) -> f64 {
    assert_eq!(x.len(), pd.k(), "preimage_norm_sq dimension");
    let sol = numlin::cholesky_solve(&pd.chol, x);
    numlin::dot(&sol, x)
}

/// `x0 + C y`.
pub fn push_coordinates(pd: &ProjectionData, x0: &[f64], y: &[f64]) -> Vec<f64> {
    push_with_factor(pd.chol(), x0, y)
}

pub(crate) fn push_with_factor(factor: &Matrix, x0: &[f64], y: &[f64]) -> Vec<f64> {
    let mut x = factor.mul_vec(y);
    for (xi, oi) in x.iter_mut().zip(x0) {
        *xi += oi;
    }
    x
}

/// `‖P₀ t‖²` for `t ∈ R^k` embedded in `ℓ²`, with `P₀` the orthogonal
/// projection onto `ker Q`.
///
/// Computed from the row space of `Q` (`P₀t = t − Q⁺Qt`) rather than from a
/// kernel basis, so comparing it with `⟨G_∞ t, t⟩` is a genuine check.
pub fn kernel_projection_norm_sq(validated: &ValidatedProblem, t: &[f64]) -> Result<f64> {
    let k = validated.k();
    if t.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "t has {} entries, k = {k}",
            t.len()
        )));
    }
    let q = validated.problem().truncated_q(Truncation::Infinite);
    let mut embedded = vec![0.0; q.cols()];
    embedded[..k].copy_from_slice(t);
    let qt = q.mul_vec(&embedded);
    let row_part = numlin::least_norm_solution(&q, &qt, validated.tol())?;
    Ok(embedded
        .iter()
        .zip(&row_part)
        .map(|(a, b)| (a - b).powi(2))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine_model::{validate, AffineProblem};
    use approx::assert_abs_diff_eq;

    fn fix_a(c: f64) -> ValidatedProblem {
        validate(AffineProblem::new(Matrix::from_rows(&[vec![0.0, 1.0]]), vec![c], 1).unwrap())
            .unwrap()
    }

    fn fix_b() -> ValidatedProblem {
        validate(AffineProblem::new(Matrix::from_rows(&[vec![3.0, 4.0]]), vec![5.0], 1).unwrap())
            .unwrap()
    }

    #[test]
    fn coordinate_slice_has_unit_gram() {
        let v = fix_a(0.0);
        for n in [4, 10, 1000] {
            let pd = build_projection(&v, Truncation::Finite(n)).unwrap();
            assert_abs_diff_eq!(pd.gram()[(0, 0)], 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(pd.log_det_l0(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn fix_b_gram() {
        let v = fix_b();
        let inf = build_projection(&v, Truncation::Infinite).unwrap();
        assert_abs_diff_eq!(inf.gram()[(0, 0)], 0.64, epsilon = 1e-14);
        assert_abs_diff_eq!(inf.log_det_l0(), 0.8f64.ln(), epsilon = 1e-14);
        let at4 = build_projection(&v, Truncation::Finite(4)).unwrap();
        assert_eq!(at4.gram(), inf.gram());
    }

    #[test]
    fn preimage_norms() {
        let pd = build_projection(&fix_a(0.0), Truncation::Infinite).unwrap();
        assert_abs_diff_eq!(preimage_norm_sq(&pd, &[1.0]), 1.0, epsilon = 1e-15);
        let pd = build_projection(&fix_b(), Truncation::Infinite).unwrap();
        assert_abs_diff_eq!(preimage_norm_sq(&pd, &[1.0]), 1.5625, epsilon = 1e-13);
        assert_eq!(preimage_norm_sq(&pd, &[0.0]), 0.0);
    }

    #[test]
    fn push_examples() {
        let pd = build_projection(&fix_b(), Truncation::Infinite).unwrap();
        assert_eq!(push_coordinates(&pd, &[0.6], &[0.0]), vec![0.6]);
        assert_abs_diff_eq!(push_coordinates(&pd, &[0.6], &[1.0])[0], 1.4, epsilon = 1e-14);
        let pd = build_projection(&fix_a(0.0), Truncation::Infinite).unwrap();
        assert_abs_diff_eq!(push_coordinates(&pd, &[0.0], &[2.0])[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn push_preserves_preimage_norm() {
        let pd = build_projection(&fix_b(), Truncation::Infinite).unwrap();
        let x = push_coordinates(&pd, &[0.6], &[1.7]);
        assert_abs_diff_eq!(preimage_norm_sq(&pd, &[x[0] - 0.6]), 1.7 * 1.7, epsilon = 1e-12);
    }

    #[test]
    fn kernel_projection_examples() {
        assert_abs_diff_eq!(
            kernel_projection_norm_sq(&fix_a(1.0), &[1.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        // P₀e₁ = e₁ − (3/25)(3, 4)
        assert_abs_diff_eq!(
            kernel_projection_norm_sq(&fix_b(), &[1.0]).unwrap(),
            400.0 / 625.0,
            epsilon = 1e-14
        );
        assert_eq!(kernel_projection_norm_sq(&fix_b(), &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn materialized_basis_is_orthonormal() {
        let v = fix_b();
        let pd = build_projection(&v, Truncation::Finite(7)).unwrap();
        let k = pd.kernel().to_matrix().unwrap();
        assert_eq!((k.rows(), k.cols()), (7, 6));
        let ktk = k.transpose().matmul(&k);
        for i in 0..6 {
            for j in 0..6 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ktk[(i, j)], e, epsilon = 1e-14);
            }
        }
        let qk = v.problem().q().zero_padded(7).matmul(&k);
        assert!(qk.max_abs() < 1e-14);
    }
}
