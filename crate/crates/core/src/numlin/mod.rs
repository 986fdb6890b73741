//! Small dense linear algebra, quadrature rules and the log-domain special
//! functions the rest of the crate is built on.

pub mod gauss;
mod matrix;

pub use matrix::{
    cholesky, cholesky_solve, dot, kernel_onb, least_norm_solution, norm_sq, numerical_rank,
    spd_solve_and_logdet, Matrix, PivotedQr,
};

use std::f64::consts::{LN_2, PI};

/// Default relative rank cutoff.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln c_j`, where `c_j = 2 π^{(j+1)/2} / Γ((j+1)/2)` is the surface area
/// of the unit `j`-sphere in `R^{j+1}`.
pub fn log_surface_constant(j: usize) -> f64 {
    let h = 0.5 * (j as f64 + 1.0);
    LN_2 + h * PI.ln() - ln_gamma(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Γ at half-integers by the recurrence Γ(x+1) = xΓ(x).
    fn gamma_half_integer(twice: usize) -> f64 {
        let (mut x, mut g) = if twice % 2 == 0 {
            (1.0, 1.0)
        } else {
            (0.5, PI.sqrt())
        };
        while 2.0 * x < twice as f64 {
            g *= x;
            x += 1.0;
        }
        g
    }

    #[test]
    fn low_dimensional_spheres() {
        assert_relative_eq!(log_surface_constant(0), LN_2, max_relative = 1e-15);
        assert_relative_eq!(log_surface_constant(1), (2.0 * PI).ln(), max_relative = 1e-15);
        assert_relative_eq!(log_surface_constant(2), (4.0 * PI).ln(), max_relative = 1e-15);
    }

    #[test]
    fn matches_linear_domain_up_to_fifty() {
        for j in 0..=50usize {
            let direct = 2.0 * PI.powf(0.5 * (j as f64 + 1.0)) / gamma_half_integer(j + 1);
            assert_relative_eq!(log_surface_constant(j).exp(), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn no_overflow_at_ten_million() {
        let v = log_surface_constant(10_000_000);
        assert!(v.is_finite() && v < 0.0);
        // ratio c_{j-1}/c_j ~ sqrt(j/(2π)) for large j
        let j = 10_000_000usize;
        let ratio = (log_surface_constant(j - 1) - log_surface_constant(j)).exp();
        assert_relative_eq!(ratio, (j as f64 / (2.0 * PI)).sqrt(), max_relative = 1e-6);
    }
}
