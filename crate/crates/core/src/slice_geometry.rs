//! Per-`N` geometry of the slice `S^{N-1}(√N) ∩ Q_N⁻¹(w⁰)`.
//!
//! The slice is a `(d−m)`-sphere (`d = N−1`) of radius `a = √(N − |z⁰_N|²)`
//! centered at `z⁰_N`. Writing its first `k` coordinates as `x⁰ + C y`, the
//! normalized surface measure pushes forward to the density
//! `prefactor · (1 − ‖y‖²/a²)^{(d−k−m−1)/2}` on the ball `‖y‖ < a`, with
//! `prefactor = c_{d−k−m} / (a^k c_{d−m})`.

use crate::affine_model::{closest_point_unchecked, Truncation, ValidatedProblem};
use crate::error::{Error, Result};
use crate::numlin::{self, log_surface_constant};
use crate::projections::{build_projection, ProjectionData};

#[derive(Debug, Clone)]
pub struct SliceGeometry {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub k: usize,
    /// `z⁰_N`, truncated to the stable width.
    pub z0n: Vec<f64>,
    /// First `k` coordinates of `z⁰_N`.
    pub x0: Vec<f64>,
    /// Slice radius `a_{z⁰_N}`.
    pub a_z: f64,
    /// `(d − k − m − 1) / 2`.
    pub exponent: f64,
    pub log_prefactor: f64,
    pub pd: ProjectionData,
}

pub fn build_slice(validated: &ValidatedProblem, n: usize) -> Result<SliceGeometry> {
    let level = Truncation::Finite(n);
    let z0n = closest_point_unchecked(validated, level);
    if let Ok(z) = &z0n {
        let norm_sq = numlin::norm_sq(z);
        if n as f64 <= norm_sq {
            return Err(Error::SliceEmpty { n, norm_sq });
        }
    }
    validated.check_level(level)?;
    let z0n = z0n?;
    let norm_sq = numlin::norm_sq(&z0n);
    let (k, m) = (validated.k(), validated.m());
    let a_z = (n as f64 - norm_sq).sqrt();
    let pd = build_projection(validated, level)?;
    let mut x0 = vec![0.0; k];
    for (xi, zi) in x0.iter_mut().zip(&z0n) {
        *xi = *zi;
    }
    Ok(SliceGeometry {
        n,
        d: n - 1,
        m,
        k,
        z0n,
        x0,
        a_z,
        exponent: (n as f64 - k as f64 - m as f64 - 2.0) / 2.0,
        log_prefactor: log_prefactor_for(n, k, m, a_z),
        pd,
    })
}

/// `ln[c_{d−k−m} / (a^k c_{d−m})]` with `d = N − 1`.
pub fn log_prefactor_for(n: usize, k: usize, m: usize, a_z: f64) -> f64 {
    let d = n - 1;
    log_surface_constant(d - k - m) - log_surface_constant(d - m) - k as f64 * a_z.ln()
}

pub fn log_norm_prefactor(geom: &SliceGeometry) -> f64 {
    geom.log_prefactor
}

/// Fiber weight `(1 − r²/a²)^exponent` on `[0, a)`, zero outside.
pub fn weight(geom: &SliceGeometry, r: f64) -> f64 {
    weight_at(geom.a_z, geom.exponent, r)
}

pub(crate) fn weight_at(a_z: f64, exponent: f64, r: f64) -> f64 {
    if r >= a_z {
        return 0.0;
    }
    if exponent == 0.0 {
        return 1.0;
    }
    (exponent * (-(r / a_z).powi(2)).ln_1p()).exp()
}

/// Total mass of the pushed-forward density, `prefactor · ∫_{‖y‖<a} weight`,
/// evaluated in closed form; equals 1 up to round-off.
pub fn total_mass(geom: &SliceGeometry) -> f64 {
    let k = geom.k as f64;
    // ∫_{‖y‖<a} (1−‖y‖²/a²)^e dy = |S^{k−1}| a^k B(k/2, e+1) / 2
    let log_ball = log_surface_constant(geom.k - 1) + k * geom.a_z.ln() - std::f64::consts::LN_2
        + numlin::ln_gamma(k / 2.0)
        + numlin::ln_gamma(geom.exponent + 1.0)
        - numlin::ln_gamma(k / 2.0 + geom.exponent + 1.0);
    (geom.log_prefactor + log_ball).exp()
}

/// `lhs − rhs` of `(1 − y/N)^{(N−k−m−2)/2} ≤ e^{(k+m+2)/2} e^{−y/2}`;
/// non-positive whenever `0 < y ≤ N` and `N > k + m + 2`.
pub fn dominating_bound_gap(y: f64, n: usize, k: usize, m: usize) -> f64 {
    let shift = (k + m + 2) as f64;
    let p = (n as f64 - shift) / 2.0;
    let lhs = if y >= n as f64 {
        0.0
    } else {
        (p * (-y / n as f64).ln_1p()).exp()
    };
    let rhs = (shift / 2.0 - y / 2.0).exp();
    lhs - rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine_model::{validate, AffineProblem};
    use crate::numlin::Matrix;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn fix_a(c: f64) -> ValidatedProblem {
        validate(AffineProblem::new(Matrix::from_rows(&[vec![0.0, 1.0]]), vec![c], 1).unwrap())
            .unwrap()
    }

    fn fix_b() -> ValidatedProblem {
        validate(AffineProblem::new(Matrix::from_rows(&[vec![3.0, 4.0]]), vec![5.0], 1).unwrap())
            .unwrap()
    }

    #[test]
    fn radii() {
        assert_abs_diff_eq!(build_slice(&fix_a(3.0), 10).unwrap().a_z, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            build_slice(&fix_b(), 100).unwrap().a_z,
            99f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn empty_slice_at_boundary() {
        let v = fix_a(3.0);
        let err = build_slice(&v, 9).unwrap_err();
        assert!(matches!(err, Error::SliceEmpty { n: 9, .. }));
        assert!(matches!(build_slice(&fix_b(), 3), Err(Error::BelowMinN { n: 3, n_min: 4 })));
    }

    #[test]
    fn slice_empty_reported() {
        // s = 6, the truncations below s carry a larger closest point
        let q = Matrix::from_rows(&[vec![0.0, 0.5, 0.0, 0.0, 0.0, 3.0]]);
        let v = validate(AffineProblem::new(q, vec![1.5], 1).unwrap()).unwrap();
        // |z⁰_5|² = 9 so N = 5 is empty; n_min skips it
        assert_eq!(v.n_min(), 6);
        assert!(matches!(build_slice(&v, 5), Err(Error::SliceEmpty { n: 5, .. })));
        assert!(build_slice(&v, 6).is_ok());
    }

    #[test]
    fn weight_examples() {
        let g = build_slice(&fix_a(0.0), 1_000_000).unwrap();
        assert_eq!(weight(&g, 0.0), 1.0);
        assert_eq!(weight(&g, g.a_z), 0.0);
        // (1 − 1/N)^{(N−4)/2} → e^{−1/2}
        assert_abs_diff_eq!(weight(&g, 1.0), (-0.5f64).exp(), epsilon = 1e-5);
    }

    #[test]
    fn weight_is_monotone_and_continuous() {
        let g = build_slice(&fix_b(), 64).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let r = g.a_z * i as f64 / 1000.0;
            let w = weight(&g, r);
            assert!(w <= prev);
            prev = w;
        }
        assert!(weight(&g, g.a_z * (1.0 - 1e-9)) < 1e-100);
    }

    #[test]
    fn prefactor_small_case() {
        // k = m = 1, N = 4: c₁ / (c₂ a) = 1 / (2a)
        let g = build_slice(&fix_a(0.0), 4).unwrap();
        assert_relative_eq!(
            log_norm_prefactor(&g).exp(),
            1.0 / (2.0 * g.a_z),
            max_relative = 1e-14
        );
        assert_eq!(g.exponent, 0.0);
        assert_eq!(log_prefactor_for(10, 0, 1, 3.0), 0.0);
    }

    #[test]
    fn prefactor_limit() {
        for k in 1..=3 {
            let n = 1_000_000;
            let lp = log_prefactor_for(n, k, 1, (n as f64).sqrt());
            let target = (2.0 * std::f64::consts::PI).powf(-(k as f64) / 2.0);
            assert_relative_eq!(lp.exp(), target, max_relative = 1e-3);
        }
    }

    #[test]
    fn mass_is_one() {
        for n in [4, 5, 16, 64, 1024, 4096] {
            let g = build_slice(&fix_b(), n).unwrap();
            assert_abs_diff_eq!(total_mass(&g), 1.0, epsilon = 1e-11);
        }
    }

    proptest! {
        #[test]
        fn dominating_bound(
            n in 5usize..100_000,
            k in 1usize..4,
            m in 1usize..4,
            frac in 1e-9f64..1.0,
        ) {
            prop_assume!(n > k + m + 2);
            let y = frac * n as f64;
            prop_assert!(dominating_bound_gap(y, n, k, m) <= 1e-12);
        }
    }
}
