use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine_model::ValidatedProblem;
use crate::error::{Error, Result};
use crate::integrators::{counterexample_probe, gaussian_limit, slice_mean_mc, slice_mean_quadrature};
use crate::slice_geometry::build_slice;
use crate::testfns::{known_limit, TestFunction};

use super::config::{CounterexampleConfig, RunConfig};
use super::with_threads;

/// One dimension of a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub quad_value: f64,
    pub quad_err: f64,
    pub mc_value: f64,
    pub mc_stderr: f64,
    pub limit_value: f64,
    /// `|quad_value − limit_value|`.
    pub abs_error: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Skipped dimensions with the reason.
    pub notes: Vec<String>,
    pub limit: f64,
    pub limit_err: f64,
}

/// Limit value and its error estimate for `phi`, chosen per the config.
pub(crate) fn limit_for(
    cfg: &RunConfig,
    validated: &ValidatedProblem,
    phi: &TestFunction,
) -> Result<(f64, f64)> {
    let closed = known_limit(phi, validated)?;
    match cfg
        .limit
        .method_for(validated.k(), closed.is_some(), &cfg.mc_config())
    {
        None => Ok((closed.expect("closed form present"), 0.0)),
        Some(method) => {
            let r = gaussian_limit(validated, phi, &method)?;
            if r.diverged {
                return Err(Error::NotAdmissible(
                    "Monte Carlo estimate of the limit did not stabilize".into(),
                ));
            }
            Ok((r.value, r.err_estimate))
        }
    }
}

/// Limit value and error estimate for the configured function.
pub fn limit_value(cfg: &RunConfig, validated: &ValidatedProblem) -> Result<(f64, f64)> {
    limit_for(cfg, validated, cfg.function()?)
}

pub fn run_sweep(cfg: &RunConfig, threads: usize) -> Result<SweepOutcome> {
    let validated = cfg.problem()?.validated()?;
    let phi = cfg.function()?;
    phi.check_arity(validated.k())?;
    if !phi.admissible_for_limit() {
        return Err(Error::NotAdmissible(format!(
            "{} is {} with respect to the limiting Gaussian; the limit theorem needs \
             phi bounded or in L^p for some p > 1",
            phi.describe(),
            phi.lp_class()
        )));
    }
    cfg.quad.validate()?;
    let mc = cfg.mc_config();
    if cfg.mc.enabled {
        mc.validate()?;
    }
    let (limit, limit_err) = limit_for(cfg, &validated, phi)?;
    let mut schedule = cfg.schedule();
    schedule.sort_unstable();
    schedule.dedup();

    let results: Vec<Result<std::result::Result<SweepRow, String>>> = with_threads(threads, || {
        schedule
            .par_iter()
            .map(|&n| {
                let start = Instant::now();
                let geom = match build_slice(&validated, n) {
                    Ok(g) => g,
                    Err(e @ (Error::SliceEmpty { .. } | Error::BelowMinN { .. })) => {
                        return Ok(Err(format!("N = {n} skipped: {e}")));
                    }
                    Err(e) => return Err(e),
                };
                let quad = slice_mean_quadrature(&geom, phi, &cfg.quad)?;
                let (mc_value, mc_stderr) = if cfg.mc.enabled {
                    let r = slice_mean_mc(&geom, phi, &mc)?;
                    (r.value, r.err_estimate)
                } else {
                    (f64::NAN, f64::NAN)
                };
                let wall_ms = if cfg.outputs.record_timing {
                    start.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                };
                Ok(Ok(SweepRow {
                    n,
                    quad_value: quad.value,
                    quad_err: quad.err_estimate,
                    mc_value,
                    mc_stderr,
                    limit_value: limit,
                    abs_error: (quad.value - limit).abs(),
                    wall_ms,
                }))
            })
            .collect()
    })?;

    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for r in results {
        match r? {
            Ok(row) => rows.push(row),
            Err(note) => notes.push(note),
        }
    }
    Ok(SweepOutcome {
        rows,
        notes,
        limit,
        limit_err,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub z: f64,
    pub radius: f64,
    pub value: f64,
}

pub fn run_counterexample_rows(cfg: &CounterexampleConfig) -> Result<Vec<CounterexampleRow>> {
    if cfg.radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Config("counterexample radii must be positive".into()));
    }
    if cfg.nodes < 2 {
        return Err(Error::Config("counterexample nodes must be >= 2".into()));
    }
    Ok(cfg
        .z
        .iter()
        .flat_map(|&z| {
            cfg.radii.iter().map(move |&radius| CounterexampleRow {
                z,
                radius,
                value: counterexample_probe(z, radius, cfg.nodes),
            })
        })
        .collect())
}

pub fn run_counterexample(cfg: &RunConfig) -> Result<Vec<CounterexampleRow>> {
    run_counterexample_rows(&cfg.counterexample)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(c: f64, func: &str, schedule: &str) -> RunConfig {
        RunConfig::from_json(&format!(
            r#"{{"problem": {{"rows": 1, "cols": 2, "q": [0, 1], "w0": [{c}], "k": 1}},
                 "function": {func}, "schedule": {schedule},
                 "mc": {{"n_samples": 20000}}, "seed": 5}}"#
        ))
        .unwrap()
    }

    #[test]
    fn cosine_sweep_converges() {
        let cfg = config(0.0, r#"{"kind": "cos_linear", "t": [1]}"#, "[32, 256, 4096]");
        let out = run_sweep(&cfg, 2).unwrap();
        assert_eq!(out.rows.len(), 3);
        assert!((out.limit - (-0.5f64).exp()).abs() < 1e-15);
        assert!(out.rows[2].abs_error <= 1e-3);
        assert!(out.rows.windows(2).all(|w| w[0].n < w[1].n));
        for r in &out.rows {
            assert_eq!(r.abs_error, (r.quad_value - r.limit_value).abs());
        }
    }

    #[test]
    fn moment_column_matches_identity() {
        let cfg = config(3.0, r#"{"kind": "monomial", "alpha": [2]}"#, "[16, 64, 1024]");
        let out = run_sweep(&cfg, 1).unwrap();
        for r in &out.rows {
            let n = r.n as f64;
            assert!((r.quad_value - (n - 9.0) / (n - 1.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn empty_slice_rows_are_skipped() {
        let cfg = config(3.0, r#"{"kind": "monomial", "alpha": [2]}"#, "[9, 10, 32]");
        let out = run_sweep(&cfg, 1).unwrap();
        assert_eq!(out.rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![10, 32]);
        assert_eq!(out.notes.len(), 1);
        assert!(out.notes[0].contains("empty"));
    }

    #[test]
    fn counterexample_function_is_refused() {
        let cfg = config(0.0, r#"{"kind": "counterexample_g"}"#, "[32]");
        let err = run_sweep(&cfg, 1).unwrap_err();
        match err {
            Error::NotAdmissible(msg) => assert!(msg.contains("L^p")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn counterexample_columns() {
        let rows = run_counterexample_rows(&CounterexampleConfig {
            z: vec![0.0, 0.3],
            radii: vec![1.0, 10.0, 100.0, 1000.0],
            nodes: 16,
        })
        .unwrap();
        let zero: Vec<f64> = rows.iter().filter(|r| r.z == 0.0).map(|r| r.value).collect();
        assert!(zero.windows(2).all(|w| w[0] < w[1]));
        assert!(zero[3] < (std::f64::consts::PI / 2.0).sqrt());
        let shifted: Vec<f64> = rows.iter().filter(|r| r.z == 0.3).map(|r| r.value).collect();
        assert!(shifted.windows(2).all(|w| w[0] < w[1]));
    }
}
