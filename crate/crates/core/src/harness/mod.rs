//! Configuration, sweeps, verification and output emission.

mod config;
pub mod fixtures;
mod output;
mod sweep;
mod verify;

pub use config::{
    CounterexampleConfig, LimitChoice, LimitSection, McSection, Outputs, ProblemConfig,
    RunConfig, VerifyConfig,
};
pub use output::{
    counterexample_csv, sweep_csv, sweep_svg, verify_csv, write_counterexample_csv,
    write_sweep_csv, write_sweep_svg, write_verify_csv, SWEEP_HEADER,
};
pub use sweep::{
    limit_value, run_counterexample, run_counterexample_rows, run_sweep, CounterexampleRow, SweepOutcome,
    SweepRow,
};
pub use verify::{
    bounded_registry, cosine_error_sequence, cross_oracle_cases, determinant_limit_traces,
    error_sequence_ok, exact_identity_cases, run_verify, CheckRecord, CrossOracleCase,
    CrossOracleOutcome, DeterminantOutcome, DeterminantTrace, VerifyReport, CHECK_NAMES,
    MAIN_CONVERGENCE,
};

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool with `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
