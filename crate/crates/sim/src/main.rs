//! `rotcf`: run, sweep, trace and validate rotatable-antenna cell-free designs.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rotcf_core::drivers::Method;
use rotcf_sim::harness::{emit_csv, load_sweep, run_single, run_sweep};
use rotcf_sim::report::RunRecord;
use rotcf_sim::validate::run_all;
use rotcf_sim::{RunConfig, SimError};

#[derive(Parser)]
#[command(name = "rotcf", version, about = "Boresight and beamforming design for cell-free downlinks with rotatable antennas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method on one seeded drop and write a JSON report.
    Simulate(RunArgs),
    /// Run a parameter sweep file and write the CSV summary.
    Sweep(SweepArgs),
    /// Run the invariant suites; exits nonzero if any fails.
    Validate(ValidateArgs),
    /// Write the per-iteration worst-user rate of one run as CSV.
    Trace(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run config (TOML); the reference deployment when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Topology seed; `scenario.seed` from the config when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Drop index within the seed.
    #[arg(long, default_value_t = 0)]
    drop: u64,
    /// One of ao, two_stage, random_orient, isotropic, fixed_orient.
    #[arg(long, default_value = "ao")]
    method: String,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep file (TOML with a `[sweep]` table).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the sweep file.
    #[arg(long)]
    seed: Option<u64>,
    /// Restricts the sweep to one method.
    #[arg(long)]
    method: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the verdicts as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn method(name: &str) -> Result<Method, SimError> {
    Method::from_name(name).ok_or_else(|| {
        let known: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
        SimError::config("method", format!("unknown method `{name}`; expected one of {}", known.join(", ")))
    })
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), SimError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| SimError::Io { path: path.to_path_buf(), source }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| SimError::Io { path: PathBuf::from("<stdout>"), source }),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, SimError> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn run(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Simulate(a) => {
            let cfg = load_config(a.config.as_deref())?;
            let report = run_single(&cfg, method(&a.method)?, a.seed.unwrap_or(cfg.scenario.seed), a.drop)?;
            write_out(a.out.as_deref(), &(RunRecord::new(&report, a.drop, &cfg).to_json() + "\n"))
        }
        Command::Trace(a) => {
            let cfg = load_config(a.config.as_deref())?;
            let report = run_single(&cfg, method(&a.method)?, a.seed.unwrap_or(cfg.scenario.seed), a.drop)?;
            let mut text = String::from("iter,min_rate_bpshz\n");
            for (iter, rate) in &report.trace {
                text.push_str(&format!("{iter},{rate:.12e}\n"));
            }
            write_out(a.out.as_deref(), &text)
        }
        Command::Sweep(a) => {
            let (mut spec, base) = load_sweep(&a.config)?;
            if let Some(seed) = a.seed {
                spec.seed = seed;
            }
            if let Some(name) = &a.method {
                spec.methods = vec![method(name)?];
            }
            if a.jobs == 0 {
                return Err(SimError::config("jobs", "must be at least 1"));
            }
            let result = run_sweep(&spec, &base, a.jobs, None)?;
            match &a.out {
                Some(path) => emit_csv(&result, path),
                None => write_out(None, &rotcf_sim::harness::format_csv(&result)),
            }
        }
        Command::Validate(a) => {
            let verdicts = run_all(a.seed)?;
            for v in &verdicts {
                eprintln!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
            }
            if let Some(path) = &a.out {
                let json: Vec<_> = verdicts
                    .iter()
                    .map(|v| serde_json::json!({ "suite": v.name, "passed": v.passed, "detail": v.detail }))
                    .collect();
                write_out(Some(path), &(serde_json::to_string_pretty(&json).expect("verdicts serialize") + "\n"))?;
            }
            let failed: Vec<String> = verdicts.iter().filter(|v| !v.passed).map(|v| v.name.to_string()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(SimError::Validation { failed })
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.summary());
            ExitCode::FAILURE
        }
    }
}
