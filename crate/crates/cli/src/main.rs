use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use slicemean::harness::{
    self, run_counterexample, run_sweep, run_verify, with_threads, RunConfig,
};
use slicemean::integrators::slice_mean_quadrature;
use slicemean::slice_geometry::{build_slice, total_mass};
use slicemean::Error;

#[derive(Parser)]
#[command(name = "slicemean", version, about = "Means over affine slices of high-dimensional spheres")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the problem and report n_min.
    Validate,
    /// Geometry of the slice at dimension N (and the quadrature mean of the
    /// configured function, if any).
    Slice {
        #[arg(long)]
        n: usize,
    },
    /// The limiting Gaussian mean of the configured function.
    Limit,
    /// Convergence sweep over the configured schedule.
    Sweep,
    /// Run the verification suite.
    Verify,
    /// Tabulate the truncated integrals of the counterexample function.
    Counterexample,
}

enum Failure {
    Verification,
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.csv.is_some() {
        cfg.outputs.csv_path = cli.csv.clone();
    }
    if cli.svg.is_some() {
        cfg.outputs.svg_path = cli.svg.clone();
    }
    Ok(cfg)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Validate => {
            let v = cfg.problem()?.validated()?;
            let rc = v.rank_checks();
            print_json(&json!({
                "m": v.m(),
                "k": v.k(),
                "support_width": v.problem().support_width(),
                "q_rank": rc.q_rank,
                "projection_rank": rc.projection_rank,
                "n_min": v.n_min(),
                "z0": v.z0(),
            }));
        }
        Command::Slice { n } => {
            let v = cfg.problem()?.validated()?;
            let g = build_slice(&v, *n)?;
            let mut out = json!({
                "N": g.n,
                "sphere_dim": g.d - g.m,
                "radius": g.a_z,
                "exponent": g.exponent,
                "log_prefactor": g.log_prefactor,
                "total_mass": total_mass(&g),
                "x0": g.x0,
                "gram": g.pd.gram(),
            });
            if let Some(phi) = &cfg.function {
                phi.check_arity(v.k())?;
                cfg.quad.validate()?;
                let r = with_threads(cli.threads, || slice_mean_quadrature(&g, phi, &cfg.quad))??;
                out["quad_value"] = json!(r.value);
                out["quad_err"] = json!(r.err_estimate);
            }
            print_json(&out);
        }
        Command::Limit => {
            let v = cfg.problem()?.validated()?;
            let phi = cfg.function()?;
            phi.check_arity(v.k())?;
            if !phi.admissible_for_limit() {
                return Err(Error::NotAdmissible(format!(
                    "{} is not in L^p for any p > 1 under the limiting Gaussian",
                    phi.describe()
                ))
                .into());
            }
            let (value, err) = with_threads(cli.threads, || harness::limit_value(&cfg, &v))??;
            print_json(&json!({ "limit_value": value, "err_estimate": err }));
        }
        Command::Sweep => {
            let out = run_sweep(&cfg, cli.threads)?;
            for note in &out.notes {
                eprintln!("{note}");
            }
            emit(&harness::sweep_csv(&out.rows)?, cfg.outputs.csv_path.as_ref())?;
            if let Some(svg) = &cfg.outputs.svg_path {
                harness::write_sweep_svg(&out.rows, svg)?;
            }
        }
        Command::Verify => {
            let report = run_verify(&cfg, cli.threads)?;
            for c in &report.checks {
                eprintln!(
                    "{:<4} {:<28} worst = {:e}  tol = {:e}  trials = {}",
                    if c.passed { "ok" } else { "FAIL" },
                    c.name,
                    c.worst_violation,
                    c.tolerance,
                    c.trials
                );
            }
            emit(&harness::verify_csv(&report)?, cfg.outputs.csv_path.as_ref())?;
            if !report.passed() {
                return Err(Failure::Verification);
            }
        }
        Command::Counterexample => {
            let rows = run_counterexample(&cfg)?;
            emit(&harness::counterexample_csv(&rows)?, cfg.outputs.csv_path.as_ref())?;
            eprintln!(
                "g(x) = e^(x^2/2)/(1+x^2) is integrable against the standard Gaussian (z = 0 \
                 column tends to sqrt(pi/2)) but not in L^p for any p > 1; after the shift \
                 z != 0 the truncated integrals grow without bound, so the L^p, p > 1, \
                 hypothesis cannot be dropped"
            );
        }
    }
    Ok(())
}

fn exit_code<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            1
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(exit_code(std::env::args_os()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &tempfile::TempDir, text: &str) -> String {
        let path = dir.path().join("run.json");
        std::fs::write(&path, text).unwrap();
        path.to_string_lossy().into_owned()
    }

    const FIX_A: &str = r#""problem": {"rows": 1, "cols": 2, "q": [0, 1], "w0": [0], "k": 1}"#;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(exit_code(["slicemean"]), 2);
        assert_eq!(exit_code(["slicemean", "frobnicate"]), 2);
        assert_eq!(exit_code(["slicemean", "slice"]), 2);
    }

    #[test]
    fn missing_or_malformed_config_exits_2() {
        assert_eq!(exit_code(["slicemean", "validate", "--config", "/nonexistent/x.json"]), 2);
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(&dir, r#"{"unknown_key": 1}"#);
        assert_eq!(exit_code(["slicemean", "validate", "--config", &cfg]), 2);
        // no problem section
        assert_eq!(exit_code(["slicemean", "validate"]), 2);
    }

    #[test]
    fn validate_and_slice_succeed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            &dir,
            &format!(r#"{{{FIX_A}, "function": {{"kind": "cos_linear", "t": [1]}}}}"#),
        );
        assert_eq!(exit_code(["slicemean", "validate", "--config", &cfg]), 0);
        assert_eq!(exit_code(["slicemean", "slice", "--n", "64", "--config", &cfg]), 0);
        assert_eq!(exit_code(["slicemean", "limit", "--config", &cfg]), 0);
        // below n_min
        assert_eq!(exit_code(["slicemean", "slice", "--n", "3", "--config", &cfg]), 2);
    }

    #[test]
    fn counterexample_function_is_refused_with_2() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            &dir,
            &format!(r#"{{{FIX_A}, "function": {{"kind": "counterexample_g"}}, "schedule": [32]}}"#),
        );
        assert_eq!(exit_code(["slicemean", "sweep", "--config", &cfg]), 2);
        assert_eq!(exit_code(["slicemean", "limit", "--config", &cfg]), 2);
    }

    #[test]
    fn sweep_writes_csv_and_svg() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            &dir,
            &format!(
                r#"{{{FIX_A}, "function": {{"kind": "cos_linear", "t": [1]}},
                    "schedule": [32, 64, 128], "mc": {{"n_samples": 5000}}}}"#
            ),
        );
        let csv = dir.path().join("out.csv");
        let svg = dir.path().join("out.svg");
        let code = exit_code([
            "slicemean",
            "sweep",
            "--config",
            &cfg,
            "--csv",
            csv.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 4);
        assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
    }

    #[test]
    fn unwritable_output_exits_2() {
        assert_eq!(
            exit_code(["slicemean", "counterexample", "--csv", "/nonexistent/dir/out.csv"]),
            2
        );
    }

    #[test]
    fn verify_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write_config(&dir, r#"{"verify": {"checks": []}}"#);
        assert_eq!(exit_code(["slicemean", "verify", "--config", &empty]), 0);
        let strict = write_config(
            &dir,
            r#"{"verify": {"checks": ["surface_constants", "pushforward_identity"], "tol": 0}}"#,
        );
        assert_eq!(exit_code(["slicemean", "verify", "--config", &strict]), 1);
    }
}
