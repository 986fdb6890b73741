//! Evaluators for slice means and their Gaussian limit.
//!
//! * [`slice_mean_quadrature`] integrates the disintegrated form in the
//!   radial coordinate `y` with a Beta-matched Gauss–Jacobi rule.
//! * [`slice_mean_mc`] samples the slice sphere directly.
//! * [`gaussian_limit`] evaluates the limiting Gaussian integral.
//! * [`counterexample_probe`] truncates the integral of `g(x)` against a
//!   shifted Gaussian to show how it blows up.
//!
//! Monte Carlo runs are split into fixed-size shards; shard `i` draws from
//! ChaCha stream `i` of the configured seed and shard statistics are merged
//! in shard order, so results do not depend on the thread count.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine_model::{Truncation, ValidatedProblem};
use crate::error::{Error, Result};
use crate::numlin::gauss::{gauss_hermite_normal, gauss_jacobi_beta, gauss_legendre};
use crate::numlin::{self, Matrix};
use crate::projections::{build_projection, push_with_factor};
use crate::slice_geometry::SliceGeometry;
use crate::testfns::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    pub radial_nodes: usize,
    /// Directions on the circle (`k = 2`).
    pub angular_nodes: usize,
    /// Gauss–Legendre nodes in the polar cosine (`k = 3`).
    pub polar_nodes: usize,
    /// Equispaced azimuth nodes (`k = 3`).
    pub azimuthal_nodes: usize,
    pub target_rel_err: f64,
    /// Radial node count at which refinement stops.
    pub max_radial_nodes: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            radial_nodes: 128,
            angular_nodes: 64,
            polar_nodes: 32,
            azimuthal_nodes: 64,
            target_rel_err: 1e-9,
            max_radial_nodes: 1024,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.radial_nodes,
            self.angular_nodes,
            self.polar_nodes,
            self.azimuthal_nodes,
        ];
        if counts.iter().any(|&c| c < 8) {
            return Err(Error::Config("quadrature node counts must be >= 8".into()));
        }
        if !(self.target_rel_err > 0.0 && self.target_rel_err < 1e-2) {
            return Err(Error::Config("target_rel_err must lie in (0, 1e-2)".into()));
        }
        if self.max_radial_nodes < self.radial_nodes {
            return Err(Error::Config("max_radial_nodes must be >= radial_nodes".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub shard_size: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            seed: 0,
            shard_size: 1 << 16,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.shard_size == 0 {
            return Err(Error::Config("n_samples and shard_size must be >= 1".into()));
        }
        Ok(())
    }

    fn shard_count(&self) -> u64 {
        self.n_samples.div_ceil(self.shard_size)
    }

    fn shard_len(&self, shard: u64) -> u64 {
        self.shard_size
            .min(self.n_samples - shard * self.shard_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    /// Quadrature: difference to the half-resolution rule. Monte Carlo:
    /// standard error.
    pub err_estimate: f64,
    pub n_evals: u64,
    /// Set when a Monte Carlo estimate failed to stabilize.
    pub diverged: bool,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Moments { count, mean, m2 }
    }

    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let var = (self.m2 / (self.count - 1) as f64).max(0.0);
        (var / self.count as f64).sqrt()
    }
}

/// Unit directions with weights summing to one.
fn angular_rule(k: usize, first: usize, second: usize) -> Vec<(Vec<f64>, f64)> {
    match k {
        1 => vec![(vec![1.0], 0.5), (vec![-1.0], 0.5)],
        2 => (0..first)
            .map(|j| {
                let th = 2.0 * PI * j as f64 / first as f64;
                (vec![th.cos(), th.sin()], 1.0 / first as f64)
            })
            .collect(),
        3 => {
            let polar = gauss_legendre(first);
            let mut out = Vec::with_capacity(first * second);
            for (&c, &w) in polar.nodes.iter().zip(&polar.weights) {
                let s = (1.0 - c * c).max(0.0).sqrt();
                for j in 0..second {
                    let ph = 2.0 * PI * j as f64 / second as f64;
                    out.push((vec![s * ph.cos(), s * ph.sin(), c], 0.5 * w / second as f64));
                }
            }
            out
        }
        _ => unreachable!("dimension checked by caller"),
    }
}

fn eval_checked(phi: &TestFunction, x: Vec<f64>) -> Result<f64> {
    let v = phi.eval(&x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { at: x })
    }
}

#[derive(Debug, Clone, Copy)]
struct Resolution {
    radial: usize,
    first: usize,
    second: usize,
}

impl Resolution {
    fn halved(self) -> Self {
        Self {
            radial: self.radial / 2,
            first: self.first / 2,
            second: self.second / 2,
        }
    }
}

fn quadrature_at(
    geom: &SliceGeometry,
    factor: &Matrix,
    phi: &TestFunction,
    res: Resolution,
) -> Result<(f64, u64)> {
    let k = geom.k;
    // ‖y‖ = a√u turns the radial measure r^{k−1}(1 − r²/a²)^e dr into
    // u^{k/2−1}(1 − u)^e du; the rule is normalized so φ ≡ 1 gives 1.
    let radial = gauss_jacobi_beta(res.radial, 0.5 * k as f64 - 1.0, geom.exponent);
    let dirs = angular_rule(k, res.first, res.second);
    let mut total = 0.0;
    for (&u, &w) in radial.nodes.iter().zip(&radial.weights) {
        let r = geom.a_z * u.sqrt();
        let mut avg = 0.0;
        for (omega, wd) in &dirs {
            let y: Vec<f64> = omega.iter().map(|o| r * o).collect();
            avg += wd * eval_checked(phi, push_with_factor(factor, &geom.x0, &y))?;
        }
        total += w * avg;
    }
    Ok((total, (radial.len() * dirs.len()) as u64))
}

/// Slice mean of `phi` by disintegration quadrature (`k ≤ 3`).
pub fn slice_mean_quadrature(
    geom: &SliceGeometry,
    phi: &TestFunction,
    cfg: &QuadConfig,
) -> Result<IntegralResult> {
    slice_mean_quadrature_with_factor(geom, geom.pd.chol(), phi, cfg)
}

/// As [`slice_mean_quadrature`], with an explicit factor `C` of
/// `G_N = C Cᵀ` in place of the Cholesky factor.
pub fn slice_mean_quadrature_with_factor(
    geom: &SliceGeometry,
    factor: &Matrix,
    phi: &TestFunction,
    cfg: &QuadConfig,
) -> Result<IntegralResult> {
    let k = geom.k;
    if k > 3 {
        return Err(Error::UnsupportedDimension { k });
    }
    cfg.validate()?;
    phi.check_arity(k)?;
    let (first, second) = match k {
        2 => (cfg.angular_nodes, 1),
        3 => (cfg.polar_nodes, cfg.azimuthal_nodes),
        _ => (1, 1),
    };
    let mut res = Resolution {
        radial: cfg.radial_nodes,
        first,
        second,
    };
    let mut evals = 0;
    loop {
        let (fine, n_fine) = quadrature_at(geom, factor, phi, res)?;
        let (coarse, n_coarse) = quadrature_at(geom, factor, phi, res.halved())?;
        evals += n_fine + n_coarse;
        let err = (fine - coarse).abs();
        if err <= cfg.target_rel_err * fine.abs().max(1.0) || res.radial * 2 > cfg.max_radial_nodes
        {
            return Ok(IntegralResult {
                value: fine,
                err_estimate: err,
                n_evals: evals,
                diverged: false,
            });
        }
        res.radial *= 2;
        if k >= 2 && res.first < 512 {
            res.first *= 2;
        }
        if k == 3 && res.second < 512 {
            res.second *= 2;
        }
    }
}

/// Per-shard moments in shard order.
fn run_shards<F>(cfg: &McConfig, draw: F) -> Result<Vec<Moments>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    cfg.validate()?;
    (0..cfg.shard_count())
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(shard);
            let mut m = Moments::default();
            for _ in 0..cfg.shard_len(shard) {
                m.push(draw(&mut rng)?);
            }
            Ok(m)
        })
        .collect()
}

fn merge_all(shards: &[Moments]) -> Moments {
    shards
        .iter()
        .fold(Moments::default(), |acc, &m| acc.merge(m))
}

/// Slice mean of `phi` by uniform sampling on the slice sphere.
///
/// A sample is `z⁰_N + K y` with `y = a g/‖g‖` and `g` standard normal in
/// `R^{N−m}`. Only the first `k` coordinates are needed, so the normals on
/// the identity block of `K` enter only through their squared norm, which
/// is drawn as a single chi-squared variate.
pub fn slice_mean_mc(
    geom: &SliceGeometry,
    phi: &TestFunction,
    cfg: &McConfig,
) -> Result<IntegralResult> {
    phi.check_arity(geom.k)?;
    let kernel = geom.pd.kernel();
    let top = kernel.dense().top_rows(geom.k);
    let width = top.cols();
    let tail = match kernel.tail_dim() {
        Some(0) | None => None,
        Some(t) => Some(ChiSquared::new(t as f64).expect("positive degrees of freedom")),
    };
    let shards = run_shards(cfg, |rng| {
        let g: Vec<f64> = (0..width).map(|_| StandardNormal.sample(rng)).collect();
        let mut s2 = numlin::norm_sq(&g);
        if let Some(chi) = &tail {
            s2 += chi.sample(rng);
        }
        let scale = geom.a_z / s2.sqrt();
        let mut x = top.mul_vec(&g);
        for (xi, oi) in x.iter_mut().zip(&geom.x0) {
            *xi = oi + scale * *xi;
        }
        eval_checked(phi, x)
    })?;
    let m = merge_all(&shards);
    Ok(IntegralResult {
        value: m.mean,
        err_estimate: m.stderr(),
        n_evals: m.count,
        diverged: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum LimitMethod {
    GaussHermite { nodes: usize },
    MonteCarlo(McConfig),
}

/// `E φ(z⁰_{(k)} + C_∞ g)` with `g ~ N(0, I_k)`: the limiting Gaussian
/// integral with mean `z⁰_{(k)}` and covariance `G_∞ = C_∞ C_∞ᵀ`.
pub fn gaussian_limit(
    validated: &ValidatedProblem,
    phi: &TestFunction,
    method: &LimitMethod,
) -> Result<IntegralResult> {
    let k = validated.k();
    phi.check_arity(k)?;
    let pd = build_projection(validated, Truncation::Infinite)?;
    let chol = pd.chol();
    let mean = &validated.z0()[..k];
    match method {
        LimitMethod::GaussHermite { nodes } => {
            if k > 3 {
                return Err(Error::UnsupportedDimension { k });
            }
            if !phi.gauss_hermite_ok() {
                return Err(Error::NotAdmissible(format!(
                    "{} outgrows the Gaussian weight; use Monte Carlo",
                    phi.describe()
                )));
            }
            if *nodes < 2 {
                return Err(Error::Config("Gauss-Hermite needs at least 2 nodes".into()));
            }
            let (fine, n1) = hermite_tensor(chol, mean, phi, *nodes)?;
            let (coarse, n2) = hermite_tensor(chol, mean, phi, nodes / 2)?;
            Ok(IntegralResult {
                value: fine,
                err_estimate: (fine - coarse).abs(),
                n_evals: n1 + n2,
                diverged: false,
            })
        }
        LimitMethod::MonteCarlo(cfg) => {
            let shards = run_shards(cfg, |rng| {
                let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
                eval_checked(phi, push_with_factor(chol, mean, &g))
            })?;
            let diverged = cauchy_unstable(&shards);
            let m = merge_all(&shards);
            Ok(IntegralResult {
                value: m.mean,
                err_estimate: m.stderr(),
                n_evals: m.count,
                diverged,
            })
        }
    }
}

/// Compares running estimates at 1, 2, 4, … shards and flags instability
/// when two consecutive doublings each move the estimate by more than ten
/// current standard errors.
pub fn cauchy_unstable(shards: &[Moments]) -> bool {
    let mut prev: Option<Moments> = None;
    let mut strikes = 0;
    let mut upto = 1;
    while upto <= shards.len() {
        let cur = merge_all(&shards[..upto]);
        if let Some(p) = prev {
            if (cur.mean - p.mean).abs() > 10.0 * cur.stderr() {
                strikes += 1;
                if strikes >= 2 {
                    return true;
                }
            } else {
                strikes = 0;
            }
        }
        prev = Some(cur);
        upto *= 2;
    }
    false
}

fn hermite_tensor(
    chol: &Matrix,
    mean: &[f64],
    phi: &TestFunction,
    nodes: usize,
) -> Result<(f64, u64)> {
    let k = mean.len();
    let rule = gauss_hermite_normal(nodes);
    let n = rule.len();
    let total_points = n.pow(k as u32);
    let mut sum = 0.0;
    let mut idx = vec![0usize; k];
    for _ in 0..total_points {
        let g: Vec<f64> = idx.iter().map(|&i| rule.nodes[i]).collect();
        let w: f64 = idx.iter().map(|&i| rule.weights[i]).product();
        sum += w * eval_checked(phi, push_with_factor(chol, mean, &g))?;
        for d in idx.iter_mut() {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
    Ok((sum, total_points as u64))
}

/// `(2π)^{−1/2} ∫_{−R}^{R} e^{zx − z²/2} / (1 + x²) dx`, the integral of
/// `e^{x²/2}/(1+x²)` against the unit-variance Gaussian centered at `z`,
/// truncated to `[−R, R]`. Composite Gauss–Legendre on unit-width panels
/// with `nodes` points each.
pub fn counterexample_probe(z: f64, radius: f64, nodes: usize) -> f64 {
    assert!(radius > 0.0, "truncation radius must be positive");
    let rule = gauss_legendre(nodes.max(2));
    let panels = (2.0 * radius).ceil().max(1.0) as usize;
    let h = 2.0 * radius / panels as f64;
    let integrand = |x: f64| (z * x - 0.5 * z * z - (x * x).ln_1p()).exp();
    let mut total = 0.0;
    for p in 0..panels {
        let mid = -radius + (p as f64 + 0.5) * h;
        total += 0.5 * h * rule.integrate(|t| integrand(mid + 0.5 * h * t));
    }
    total / (2.0 * PI).sqrt()
}
