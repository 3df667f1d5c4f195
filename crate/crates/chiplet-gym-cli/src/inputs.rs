//! Input-file loading and validation: calibration, design points, space
//! restrictions, optimizer configs, and workloads. Schema violations surface
//! as input errors (exit code 2) with field-level messages.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use chiplet_gym::calib::Calibration;
use chiplet_gym::design_space::{DesignPoint, DesignSpace, PARAM_NAMES};
use chiplet_gym::hybrid::HybridConfig;
use chiplet_gym::ppo::PpoConfig;
use chiplet_gym::sa::SaConfig;
use chiplet_gym::workloads::{builtin_benchmarks, Workload};

use crate::CliError;

pub fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(anyhow::anyhow!(msg.into()))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))
}

pub fn load_calibration(path: Option<&Path>) -> Result<Calibration, CliError> {
    match path {
        None => Ok(Calibration::default()),
        Some(p) => Calibration::from_json(&read(p)?)
            .map_err(|e| input_err(format!("{}: {e}", p.display()))),
    }
}

/// `--weights a,b,g` override of the reward weights.
pub fn apply_weights(calib: &mut Calibration, weights: Option<&str>) -> Result<(), CliError> {
    let Some(spec) = weights else { return Ok(()) };
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        return Err(input_err(format!("--weights expects a,b,g; got `{spec}`")));
    }
    let parse = |s: &str, name: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| input_err(format!("--weights: `{s}` is not a number ({name})")))
    };
    calib.reward.alpha = parse(parts[0], "alpha")?;
    calib.reward.beta = parse(parts[1], "beta")?;
    calib.reward.gamma = parse(parts[2], "gamma")?;
    Ok(())
}

pub fn load_design_point(path: &Path) -> Result<DesignPoint, CliError> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| input_err(format!("{}: invalid design point: {e}", path.display())))
}

pub fn load_workloads(path: Option<&Path>) -> Result<Vec<Workload>, CliError> {
    let Some(p) = path else { return Ok(builtin_benchmarks()) };
    let loaded: Vec<Workload> = serde_json::from_str(&read(p)?)
        .map_err(|e| input_err(format!("{}: invalid workload table: {e}", p.display())))?;
    if loaded.is_empty() {
        return Err(input_err(format!("{}: workload table is empty", p.display())));
    }
    for w in &loaded {
        w.validate().map_err(input_err)?;
    }
    Ok(loaded)
}

/// Restriction file: a flat JSON object pinning parameters by name, using the
/// same value forms as a serialized design point (names for categorical
/// parameters, an integer code or location list for the HBM placement,
/// integers elsewhere). Unnamed parameters stay free.
pub fn apply_restriction(space: DesignSpace, restrict: &Value) -> Result<DesignSpace, CliError> {
    let obj = restrict
        .as_object()
        .ok_or_else(|| input_err("restriction must be a JSON object of parameter pins"))?;
    let mut space = space;
    for (name, raw) in obj {
        if !PARAM_NAMES.contains(&name.as_str()) {
            return Err(input_err(format!("restriction names unknown parameter `{name}`")));
        }
        let level = pin_level(name, raw)?;
        space = space
            .pin(name, level)
            .map_err(|e| input_err(format!("restriction `{name}`: {e}")))?;
    }
    Ok(space)
}

fn pin_level(name: &str, raw: &Value) -> Result<i64, CliError> {
    let bad = |want: &str| input_err(format!("restriction `{name}`: expected {want}, got {raw}"));
    match name {
        "arch_type" => match raw.as_str() {
            Some("2.5D") => Ok(0),
            Some("5.5D-mem-on-logic") => Ok(1),
            Some("5.5D-logic-on-logic") => Ok(2),
            _ => Err(bad("one of \"2.5D\", \"5.5D-mem-on-logic\", \"5.5D-logic-on-logic\"")),
        },
        "ic_2p5d_ai" | "ic_2p5d_hbm" => match raw.as_str() {
            Some("CoWoS") => Ok(0),
            Some("EMIB") => Ok(1),
            _ => Err(bad("\"CoWoS\" or \"EMIB\"")),
        },
        "ic_3d" => match raw.as_str() {
            Some("SoIC") => Ok(0),
            Some("FOVEROS") => Ok(1),
            _ => Err(bad("\"SoIC\" or \"FOVEROS\"")),
        },
        "hbm_placement" => {
            if let Some(code) = raw.as_i64() {
                return Ok(code);
            }
            let locs: Vec<chiplet_gym::design_space::HbmLoc> = serde_json::from_value(raw.clone())
                .map_err(|_| bad("an integer code 1..=63 or a list of locations"))?;
            chiplet_gym::design_space::HbmPlacement::from_locs(&locs)
                .map(|p| p.code() as i64)
                .ok_or_else(|| bad("a nonempty set of locations"))
        }
        _ => raw.as_i64().ok_or_else(|| bad("an integer")),
    }
}

/// Optimizer configuration file; every section is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptFile {
    pub sa: SaConfig,
    pub ppo: PpoConfig,
    pub hybrid: HybridSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridSection {
    pub trial_max: usize,
    pub n_sa_runs: usize,
    pub n_rl_agents: usize,
    /// Serialized agents to run in inference mode; empty means train per trial.
    pub inference_agents: Vec<PathBuf>,
    pub inference_episodes: usize,
}

impl Default for HybridSection {
    fn default() -> Self {
        HybridSection {
            trial_max: 20,
            n_sa_runs: 20,
            n_rl_agents: 20,
            inference_agents: Vec::new(),
            inference_episodes: 1000,
        }
    }
}

pub fn load_opt_file(path: Option<&Path>) -> Result<(OptFile, Value), CliError> {
    let Some(p) = path else {
        return Ok((OptFile::default(), Value::Null));
    };
    let text = read(p)?;
    let raw: Value = serde_json::from_str(&text)
        .map_err(|e| input_err(format!("{}: {e}", p.display())))?;
    let parsed: OptFile = serde_json::from_value(raw.clone())
        .map_err(|e| input_err(format!("{}: invalid optimizer config: {e}", p.display())))?;
    Ok((parsed, raw))
}

/// Assemble the core hybrid config, loading any inference agent blobs.
pub fn build_hybrid_config(opt: &OptFile, base_seed: u64) -> Result<HybridConfig, CliError> {
    let h = &opt.hybrid;
    let mut cfg = HybridConfig {
        trial_max: h.trial_max,
        n_sa_runs: h.n_sa_runs,
        n_rl_agents: h.n_rl_agents,
        seeds: (0..h.trial_max as u64).map(|i| base_seed.wrapping_add(i)).collect(),
        sa: opt.sa.clone(),
        ppo: opt.ppo.clone(),
        rl_inference: None,
    };
    if !h.inference_agents.is_empty() {
        let mut agents = Vec::with_capacity(h.inference_agents.len());
        for p in &h.inference_agents {
            let blob = serde_json::from_str(&read(p)?)
                .map_err(|e| input_err(format!("{}: invalid agent blob: {e}", p.display())))?;
            agents.push(blob);
        }
        cfg.rl_inference =
            Some(chiplet_gym::hybrid::RlInference { agents, episodes: h.inference_episodes });
    }
    Ok(cfg)
}
