//! Command-line surface: evaluate design points, run optimizers, enumerate
//! reduced spaces, and emit per-workload benchmark reports.
//!
//! Exit codes: 0 success, 2 input or schema error, 3 runtime or optimizer
//! failure.

mod commands;
mod inputs;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use chiplet_gym::design_space::DesignSpace;
use chiplet_gym::env::CaseCap;

#[derive(Debug)]
pub enum CliError {
    /// Bad input or schema violation; exit code 2.
    Input(anyhow::Error),
    /// Optimizer or I/O failure; exit code 3.
    Runtime(anyhow::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Sa,
    Rl,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CaseArg {
    #[value(name = "64")]
    C64,
    #[value(name = "128")]
    C128,
}

impl From<CaseArg> for CaseCap {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::C64 => CaseCap::Cap64,
            CaseArg::C128 => CaseCap::Cap128,
        }
    }
}

#[derive(Parser)]
#[command(name = "chiplet-gym", version, about = "PPAC modeling and design-space search for chiplet-based AI accelerators")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Calibration JSON; built-in defaults when omitted.
    #[arg(long)]
    calib: Option<PathBuf>,
    /// Reward weights alpha,beta,gamma (default from the calibration: 1,1,0.1).
    #[arg(long)]
    weights: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate one design point and compare against the monolithic baseline.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Design point JSON (flat object keyed by the 14 parameter names).
        #[arg(long)]
        point: PathBuf,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an optimizer and write traces, the best point, and a manifest.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Optimizer configuration JSON; defaults when omitted.
        #[arg(long)]
        opt: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Chiplet-count upper bound.
        #[arg(long, value_enum, default_value = "64")]
        case: CaseArg,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustively rank a restricted space (hard guard: 1e6 points).
    Enumerate {
        #[command(flatten)]
        common: CommonArgs,
        /// Restriction JSON: an object pinning parameters by name.
        #[arg(long)]
        restrict: PathBuf,
        #[arg(long, value_enum, default_value = "64")]
        case: CaseArg,
        /// Ranked CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-workload throughput and energy metrics vs the monolithic baseline.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        point: PathBuf,
        /// Workload table JSON; the built-in benchmarks when omitted.
        #[arg(long)]
        workloads: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn effective_calib(common: &CommonArgs) -> Result<chiplet_gym::Calibration, CliError> {
    let mut calib = inputs::load_calibration(common.calib.as_deref())?;
    inputs::apply_weights(&mut calib, common.weights.as_deref())?;
    calib.validate().map_err(inputs::input_err)?;
    Ok(calib)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    match cli.cmd {
        Cmd::Evaluate { common, point, out } => {
            let calib = effective_calib(&common)?;
            commands::evaluate::run(&point, &calib, out.as_deref())?;
            Ok(())
        }
        Cmd::Enumerate { common, restrict, case, out } => {
            let calib = effective_calib(&common)?;
            let raw: Value = serde_json::from_str(
                &std::fs::read_to_string(&restrict)
                    .map_err(|e| inputs::input_err(format!("cannot read {}: {e}", restrict.display())))?,
            )
            .map_err(|e| inputs::input_err(format!("{}: {e}", restrict.display())))?;
            let case: CaseCap = case.into();
            let space = inputs::apply_restriction(DesignSpace::with_chiplet_cap(case.n_chiplets_max()), &raw)?;
            commands::enumerate::run(space, &calib, case, &out)?;
            Ok(())
        }
        Cmd::Bench { common, point, workloads, out } => {
            let calib = effective_calib(&common)?;
            let loaded = inputs::load_workloads(workloads.as_deref())?;
            commands::bench::run(&point, &calib, &loaded, &out)?;
            Ok(())
        }
        Cmd::Optimize { common, mode, opt, seed, case, out } => {
            let calib = effective_calib(&common)?;
            let (opt_file, opt_raw) = inputs::load_opt_file(opt.as_deref())?;
            let case: CaseCap = case.into();
            std::fs::create_dir_all(&out).map_err(|e| CliError::Runtime(e.into()))?;
            let outcome = commands::optimize::run(mode, &calib, &opt_file, seed, case, &out)?;

            let hash_input = json!({
                "calibration": calib,
                "opt": opt_raw,
                "mode": format!("{mode:?}").to_lowercase(),
                "seed": seed,
                "case": case.n_chiplets_max(),
            });
            let mut manifest = commands::manifest_value(
                "optimize",
                &report::config_hash(&hash_input),
                common.calib.as_deref(),
                &outcome.outputs,
                started.elapsed().as_secs_f64(),
            );
            let obj = manifest.as_object_mut().expect("manifest is an object");
            obj.insert("runs".into(), Value::Array(outcome.runs));
            obj.insert("selection".into(), outcome.selection);
            obj.insert("failures".into(), Value::Array(outcome.failures.clone()));
            report::write_json_atomic(&out.join("manifest.json"), &manifest).map_err(CliError::Runtime)?;

            if !outcome.failures.is_empty() {
                return Err(CliError::Runtime(anyhow::anyhow!(
                    "{} optimizer trial(s) failed; see manifest.json",
                    outcome.failures.len()
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
