//! `optimize`: run one optimizer (or the hybrid farm) and write trace CSVs,
//! the best point, and a run manifest.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use chiplet_gym::design_space::DesignSpace;
use chiplet_gym::env::{CaseCap, ChipletGymEnv, EnvConfig};
use chiplet_gym::hybrid::{self, HybridConfig};
use chiplet_gym::optimizer::OptimizerRun;
use chiplet_gym::ppo::{self, PpoConfig};
use chiplet_gym::sa::{self, SaConfig};
use chiplet_gym::Calibration;

use crate::inputs::OptFile;
use crate::report;
use crate::{CliError, Mode};

pub struct OptimizeOutcome {
    pub outputs: Vec<String>,
    pub runs: Vec<Value>,
    pub selection: Value,
    pub failures: Vec<Value>,
}

fn kind_name(kind: chiplet_gym::OptKind) -> &'static str {
    match kind {
        chiplet_gym::OptKind::Sa => "sa",
        chiplet_gym::OptKind::Rl => "rl",
        chiplet_gym::OptKind::Hybrid => "hybrid",
    }
}

fn write_trace(run: &OptimizerRun, path: &Path) -> Result<(), CliError> {
    let mut buf = Vec::new();
    run.write_trace_csv(&mut buf).map_err(|e| CliError::Runtime(e.into()))?;
    report::write_atomic(path, &buf).map_err(CliError::Runtime)
}

fn run_entry(run: &OptimizerRun, trial: Option<usize>, trace_path: &Path) -> Value {
    json!({
        "optimizer": kind_name(run.kind),
        "seed": run.seed,
        "trial": trial,
        "best_obj": run.best_obj,
        "best_point": run.best_point,
        "trace_path": trace_path.display().to_string(),
    })
}

pub fn run(
    mode: Mode,
    calib: &Calibration,
    opt: &OptFile,
    seed: u64,
    case: CaseCap,
    out_dir: &Path,
) -> Result<OptimizeOutcome, CliError> {
    let env_cfg = EnvConfig { case, seed, ..Default::default() };
    let space = DesignSpace::with_chiplet_cap(case.n_chiplets_max());
    let mut outputs = Vec::new();
    let mut runs = Vec::new();
    let mut failures = Vec::new();

    let selection = match mode {
        Mode::Sa => {
            let cfg = SaConfig { seed, ..opt.sa.clone() };
            let env = ChipletGymEnv::new(calib.clone(), env_cfg);
            let run = sa::run(|a| env.objective(a), env.space(), &cfg);
            let trace = out_dir.join(format!("trace_sa_seed{seed}.csv"));
            write_trace(&run, &trace)?;
            outputs.push(trace.display().to_string());
            runs.push(run_entry(&run, None, &trace));
            run_entry(&run, None, &trace)
        }
        Mode::Rl => {
            let cfg = PpoConfig { seed, ..opt.ppo.clone() };
            let mut env = ChipletGymEnv::new(calib.clone(), env_cfg);
            let (run, agent) =
                ppo::train(&mut env, cfg).map_err(|e| CliError::Runtime(e.into()))?;
            let trace = out_dir.join(format!("trace_rl_seed{seed}.csv"));
            write_trace(&run, &trace)?;
            outputs.push(trace.display().to_string());
            let agent_path = out_dir.join(format!("agent_rl_seed{seed}.json"));
            let blob = serde_json::to_value(agent.to_blob()).expect("agent serializes");
            report::write_json_atomic(&agent_path, &blob).map_err(CliError::Runtime)?;
            outputs.push(agent_path.display().to_string());
            runs.push(run_entry(&run, None, &trace));
            run_entry(&run, None, &trace)
        }
        Mode::Hybrid => {
            let cfg: HybridConfig = crate::inputs::build_hybrid_config(opt, seed)?;
            let outcome = hybrid::run_trials(&cfg, calib, &env_cfg, &space)
                .map_err(|e| CliError::Runtime(e.into()))?;
            let mut selection = Value::Null;
            for tr in &outcome.runs {
                let trace: PathBuf = out_dir.join(format!(
                    "trace_trial{}_{}_seed{}.csv",
                    tr.trial,
                    kind_name(tr.run.kind),
                    tr.run.seed
                ));
                write_trace(&tr.run, &trace)?;
                outputs.push(trace.display().to_string());
                let entry = run_entry(&tr.run, Some(tr.trial), &trace);
                if tr.run.seed == outcome.best.seed
                    && tr.run.kind == outcome.best.kind
                    && tr.trial == outcome.provenance.trial
                {
                    selection = entry.clone();
                }
                runs.push(entry);
            }
            for f in &outcome.failures {
                failures.push(json!({
                    "trial": f.trial,
                    "optimizer": kind_name(f.optimizer),
                    "error": f.error,
                }));
            }
            selection
        }
    };

    // The best-point file is path-free so reruns are byte-identical.
    let mut best_value = selection.clone();
    if let Some(obj) = best_value.as_object_mut() {
        obj.remove("trace_path");
    }
    let best_path = out_dir.join("best_point.json");
    report::write_json_atomic(&best_path, &best_value).map_err(CliError::Runtime)?;
    outputs.push(best_path.display().to_string());

    Ok(OptimizeOutcome { outputs, runs, selection, failures })
}
