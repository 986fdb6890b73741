//! Affine subspaces `A = Q⁻¹(w⁰)` with finitely supported constraint rows.
//!
//! Row `i` of `Q` is a vector in `ℓ²` whose coordinates beyond the stored
//! width `s` are zero. Truncating to the first `N` coordinates gives `Q_N`;
//! once `N ≥ s` the truncation is lossless, which is what makes the limit
//! objects (`z⁰`, `L₀`, the Gaussian limit) exactly computable.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numlin::{self, Matrix, DEFAULT_RANK_TOL};

/// A truncation level: the first `N` coordinates, or all of `ℓ²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truncation {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Truncation::Finite(n) => write!(f, "{n}"),
            Truncation::Infinite => write!(f, "inf"),
        }
    }
}

impl From<usize> for Truncation {
    fn from(n: usize) -> Self {
        Truncation::Finite(n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineProblem {
    q: Matrix,
    w0: Vec<f64>,
    k: usize,
}

impl AffineProblem {
    pub fn new(q: Matrix, w0: Vec<f64>, k: usize) -> Result<Self> {
        if q.rows() == 0 || q.cols() == 0 {
            return Err(Error::InvalidProblem("Q must have at least one row and column".into()));
        }
        if k == 0 {
            return Err(Error::InvalidProblem("cylinder dimension k must be >= 1".into()));
        }
        if w0.len() != q.rows() {
            return Err(Error::InvalidProblem(format!(
                "w0 has {} entries but Q has {} rows",
                w0.len(),
                q.rows()
            )));
        }
        if q.data().iter().chain(&w0).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("non-finite entry".into()));
        }
        Ok(Self { q, w0, k })
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn w0(&self) -> &[f64] {
        &self.w0
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of constraints `m`.
    pub fn m(&self) -> usize {
        self.q.rows()
    }

    /// Support width `s`.
    pub fn support_width(&self) -> usize {
        self.q.cols()
    }

    /// `max(s, k)`: the width at which every limit object stabilizes.
    pub fn stable_width(&self) -> usize {
        self.q.cols().max(self.k)
    }

    /// `Q_N` for `N` below the stable width, or `Q` zero-padded to the
    /// stable width otherwise.
    pub fn truncated_q(&self, n: Truncation) -> Matrix {
        let w = self.stable_width();
        match n {
            Truncation::Finite(n) if n < self.q.cols() => self.q.leading_columns(n),
            Truncation::Finite(n) if n < w => self.q.zero_padded(n),
            _ => self.q.zero_padded(w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    /// Relative rank cutoff.
    pub tol: f64,
    /// Largest `N` searched for `n_min`.
    pub n_cap: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_RANK_TOL,
            n_cap: 1_000_000,
        }
    }
}

/// The standing hypotheses as verified for a problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankChecks {
    pub q_rank: usize,
    pub projection_rank: usize,
    pub width: usize,
}

#[derive(Debug, Clone)]
pub struct ValidatedProblem {
    problem: AffineProblem,
    z0: Vec<f64>,
    n_min: usize,
    rank_checks: RankChecks,
    tol: f64,
}

impl ValidatedProblem {
    pub fn problem(&self) -> &AffineProblem {
        &self.problem
    }

    /// Closest point `z⁰` of `A` to the origin, length `max(s, k)`.
    pub fn z0(&self) -> &[f64] {
        &self.z0
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }

    pub fn rank_checks(&self) -> RankChecks {
        self.rank_checks
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn k(&self) -> usize {
        self.problem.k
    }

    pub fn m(&self) -> usize {
        self.problem.m()
    }

    pub fn check_level(&self, n: Truncation) -> Result<()> {
        match n {
            Truncation::Finite(n) if n < self.n_min => Err(Error::BelowMinN {
                n,
                n_min: self.n_min,
            }),
            _ => Ok(()),
        }
    }
}

pub fn validate(problem: AffineProblem) -> Result<ValidatedProblem> {
    validate_with(problem, ValidateOptions::default())
}

pub fn validate_with(problem: AffineProblem, opts: ValidateOptions) -> Result<ValidatedProblem> {
    let m = problem.m();
    let k = problem.k;
    let width = problem.stable_width();
    let q_full = problem.truncated_q(Truncation::Infinite);

    let q_rank = numlin::numerical_rank(&q_full, opts.tol, 0.0);
    if q_rank < m {
        return Err(Error::RankDeficient {
            rank: q_rank,
            expected: m,
        });
    }
    let kernel = numlin::kernel_onb(&q_full, opts.tol);
    let projection_rank = numlin::numerical_rank(&kernel.top_rows(k), opts.tol, 1.0);
    if projection_rank < k {
        return Err(Error::ProjectionNotOnto {
            k,
            rank: projection_rank,
        });
    }
    let z0 = numlin::least_norm_solution(&q_full, &problem.w0, opts.tol)?;

    let floor = k + m + 2;
    let mut n_min = None;
    for n in floor..width {
        if level_admissible(&problem, n, opts.tol) {
            n_min = Some(n);
            break;
        }
    }
    let n_min = match n_min {
        Some(n) => n,
        None => {
            // past the stable width every condition except feasibility holds
            let norm_sq = numlin::norm_sq(&z0);
            let feasible = norm_sq.floor() as usize + 1;
            floor.max(width).max(feasible)
        }
    };
    if n_min > opts.n_cap {
        return Err(Error::Infeasible { cap: opts.n_cap });
    }

    Ok(ValidatedProblem {
        problem,
        z0,
        n_min,
        rank_checks: RankChecks {
            q_rank,
            projection_rank,
            width,
        },
        tol: opts.tol,
    })
}

/// All per-`N` conditions for a truncation below the stable width.
fn level_admissible(problem: &AffineProblem, n: usize, tol: f64) -> bool {
    let q_n = problem.truncated_q(Truncation::Finite(n));
    if numlin::numerical_rank(&q_n, tol, 0.0) < problem.m() {
        return false;
    }
    let kernel = numlin::kernel_onb(&q_n, tol);
    if kernel.cols() < problem.k
        || numlin::numerical_rank(&kernel.top_rows(problem.k), tol, 1.0) < problem.k
    {
        return false;
    }
    match numlin::least_norm_solution(&q_n, problem.w0(), tol) {
        Ok(z) => (n as f64) > numlin::norm_sq(&z),
        Err(_) => false,
    }
}

/// `z⁰_N`, the point of `A_N = Q_N⁻¹(w⁰)` closest to the origin, of length
/// `min(N, max(s, k))`; `z⁰` itself for `N = ∞`.
pub fn closest_point(validated: &ValidatedProblem, n: Truncation) -> Result<Vec<f64>> {
    validated.check_level(n)?;
    closest_point_unchecked(validated, n)
}

pub(crate) fn closest_point_unchecked(
    validated: &ValidatedProblem,
    n: Truncation,
) -> Result<Vec<f64>> {
    let problem = validated.problem();
    match n {
        Truncation::Finite(n) if n < problem.support_width() => numlin::least_norm_solution(
            &problem.truncated_q(Truncation::Finite(n)),
            problem.w0(),
            validated.tol,
        ),
        Truncation::Finite(n) if n < problem.stable_width() => Ok(validated.z0[..n].to_vec()),
        _ => Ok(validated.z0.clone()),
    }
}

pub fn min_valid_n(validated: &ValidatedProblem) -> usize {
    validated.n_min
}
