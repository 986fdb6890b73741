use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::affine_model::{validate_with, AffineProblem, ValidateOptions, ValidatedProblem};
use crate::error::{Error, Result};
use crate::integrators::{LimitMethod, McConfig, QuadConfig};
use crate::numlin::{Matrix, DEFAULT_RANK_TOL};
use crate::testfns::TestFunction;

/// A single JSON document describing a run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub function: Option<TestFunction>,
    /// Dimensions `N` to sweep; defaults to 32, 64, …, 4096.
    #[serde(default)]
    pub schedule: Option<Vec<usize>>,
    #[serde(default)]
    pub quad: QuadConfig,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub limit: LimitSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub counterexample: CounterexampleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries of `Q`.
    pub q: Vec<f64>,
    pub w0: Vec<f64>,
    pub k: usize,
    #[serde(default = "default_tol")]
    pub rank_tol: f64,
    #[serde(default = "default_n_cap")]
    pub n_cap: usize,
}

fn default_tol() -> f64 {
    DEFAULT_RANK_TOL
}

fn default_n_cap() -> usize {
    1_000_000
}

impl ProblemConfig {
    pub fn to_problem(&self) -> Result<AffineProblem> {
        let q = Matrix::new(self.rows, self.cols, self.q.clone())?;
        AffineProblem::new(q, self.w0.clone(), self.k)
    }

    pub fn validated(&self) -> Result<ValidatedProblem> {
        if !(self.rank_tol > 0.0) {
            return Err(Error::Config("rank_tol must be positive".into()));
        }
        validate_with(
            self.to_problem()?,
            ValidateOptions {
                tol: self.rank_tol,
                n_cap: self.n_cap,
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub enabled: bool,
    pub n_samples: u64,
    pub shard_size: u64,
}

impl Default for McSection {
    fn default() -> Self {
        let d = McConfig::default();
        Self {
            enabled: true,
            n_samples: d.n_samples,
            shard_size: d.shard_size,
        }
    }
}

impl McSection {
    pub fn with_seed(&self, seed: u64) -> McConfig {
        McConfig {
            n_samples: self.n_samples,
            seed,
            shard_size: self.shard_size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitChoice {
    /// Closed form when available, else Gauss–Hermite (`k ≤ 3`), else MC.
    Auto,
    GaussHermite,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitSection {
    pub method: LimitChoice,
    pub hermite_nodes: usize,
    pub mc_samples: u64,
}

impl Default for LimitSection {
    fn default() -> Self {
        Self {
            method: LimitChoice::Auto,
            hermite_nodes: 48,
            mc_samples: 1_000_000,
        }
    }
}

impl LimitSection {
    /// Numerical method for this choice, or `None` when the closed form
    /// should be used.
    pub fn method_for(&self, k: usize, has_closed_form: bool, mc: &McConfig) -> Option<LimitMethod> {
        let gh = LimitMethod::GaussHermite {
            nodes: self.hermite_nodes,
        };
        let monte = LimitMethod::MonteCarlo(McConfig {
            n_samples: self.mc_samples,
            ..*mc
        });
        match self.method {
            LimitChoice::Auto if has_closed_form => None,
            LimitChoice::Auto if k <= 3 => Some(gh),
            LimitChoice::Auto => Some(monte),
            LimitChoice::GaussHermite => Some(gh),
            LimitChoice::MonteCarlo => Some(monte),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub csv_path: Option<PathBuf>,
    pub svg_path: Option<PathBuf>,
    /// Fill the `wall_ms` column with measured times; off by default so
    /// that repeated runs are byte-identical.
    pub record_timing: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Checks to run, by name; all of them when absent.
    pub checks: Option<Vec<String>>,
    /// Replaces the tolerance of every round-off-bounded check.
    pub tol: Option<f64>,
    /// Monte Carlo samples per cross-oracle combination.
    pub mc_samples: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub z: Vec<f64>,
    pub radii: Vec<f64>,
    pub nodes: usize,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            z: vec![0.0, 0.3],
            radii: vec![1.0, 10.0, 20.0, 30.0, 100.0, 1000.0],
            nodes: 16,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn problem(&self) -> Result<&ProblemConfig> {
        self.problem
            .as_ref()
            .ok_or_else(|| Error::Config("missing `problem` section".into()))
    }

    pub fn function(&self) -> Result<&TestFunction> {
        self.function
            .as_ref()
            .ok_or_else(|| Error::Config("missing `function` section".into()))
    }

    pub fn schedule(&self) -> Vec<usize> {
        self.schedule
            .clone()
            .unwrap_or_else(|| (5..=12).map(|p| 1usize << p).collect())
    }

    pub fn mc_config(&self) -> McConfig {
        self.mc.with_seed(self.seed)
    }
}
