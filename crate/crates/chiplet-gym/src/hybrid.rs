//! Best-of trial loop combining annealing and the RL agent, plus the
//! multi-seed farm and the final exhaustive selection across run outcomes.
//!
//! Each trial runs one annealing pass and one RL pass and keeps the running
//! maximum. Trials execute in parallel; the fold over results happens in
//! trial order with strict-greater comparisons, so the outcome is identical
//! to sequential execution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calib::Calibration;
use crate::env::{ChipletGymEnv, EnvConfig};
use crate::optimizer::{OptKind, OptimizerRun};
use crate::ppac::evaluate;
use crate::ppo::{self, AgentBlob, PpoAgent, PpoConfig, PpoError};
use crate::sa::{self, SaConfig};

#[derive(Debug, Error)]
pub enum HybridError {
    #[error("no optimizer runs to select from")]
    EmptyInput,
    #[error("invalid hybrid configuration: {0}")]
    InvalidConfig(String),
}

/// Pre-trained agents to reuse in inference mode instead of training per trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RlInference {
    pub agents: Vec<AgentBlob>,
    /// Episodes sampled per agent.
    pub episodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridConfig {
    pub trial_max: usize,
    pub n_sa_runs: usize,
    pub n_rl_agents: usize,
    /// Per-trial base seeds; must be pairwise distinct. Empty means 0..trial_max.
    pub seeds: Vec<u64>,
    pub sa: SaConfig,
    pub ppo: PpoConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rl_inference: Option<RlInference>,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            trial_max: 20,
            n_sa_runs: 20,
            n_rl_agents: 20,
            seeds: Vec::new(),
            sa: SaConfig::default(),
            ppo: PpoConfig::default(),
            rl_inference: None,
        }
    }
}

impl HybridConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.trial_max < 1 {
            return Err("trial_max must be at least 1".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.seeds {
            if !seen.insert(s) {
                return Err(format!("seeds must be pairwise distinct (duplicate {s})"));
            }
        }
        Ok(())
    }

    fn seed_for_trial(&self, trial: usize) -> u64 {
        self.seeds.get(trial).copied().unwrap_or(trial as u64)
    }
}

/// Where the winning point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub optimizer: OptKind,
    pub seed: u64,
    pub trial: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRun {
    pub trial: usize,
    pub run: OptimizerRun,
}

/// A trial whose optimizer aborted; surviving runs are unaffected.
#[derive(Debug, Clone, Serialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub optimizer: OptKind,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct HybridOutcome {
    pub best: OptimizerRun,
    pub provenance: Provenance,
    pub runs: Vec<TrialRun>,
    pub failures: Vec<TrialFailure>,
}

/// RL seeds are decorrelated from the SA seeds of the same trial.
fn rl_seed(base: u64) -> u64 {
    base ^ 0x9e37_79b9_7f4a_7c15
}

type TrialOutput = (usize, Result<OptimizerRun, (OptKind, PpoError)>);

fn run_one_trial(
    trial: usize,
    cfg: &HybridConfig,
    calib: &Calibration,
    env_cfg: &EnvConfig,
    space: &crate::design_space::DesignSpace,
) -> Vec<TrialOutput> {
    let base_seed = cfg.seed_for_trial(trial);
    let mut out = Vec::new();
    if trial < cfg.n_sa_runs {
        let sa_cfg = SaConfig { seed: base_seed, ..cfg.sa.clone() };
        let env = ChipletGymEnv::new(calib.clone(), env_cfg.clone()).with_space(space.clone());
        let run = sa::run(|a| env.objective(a), space, &sa_cfg);
        out.push((trial, Ok(run)));
    }
    if trial < cfg.n_rl_agents {
        let mut env = ChipletGymEnv::new(calib.clone(), env_cfg.clone()).with_space(space.clone());
        let seed = rl_seed(base_seed);
        let run = match &cfg.rl_inference {
            Some(inf) if !inf.agents.is_empty() => {
                let blob = &inf.agents[trial % inf.agents.len()];
                PpoAgent::from_blob(blob, cfg.ppo.clone())
                    .and_then(|agent| ppo::run_inference(&agent, &mut env, inf.episodes, seed))
            }
            _ => {
                let ppo_cfg = PpoConfig { seed, ..cfg.ppo.clone() };
                ppo::train(&mut env, ppo_cfg).map(|(run, _)| run)
            }
        };
        out.push((trial, run.map_err(|e| (OptKind::Rl, e))));
    }
    out
}

/// Run `trial_max` trials (annealing then RL per trial) and keep the running
/// best. A failed optimizer marks its trial in `failures` without discarding
/// the other runs; the call errors only when nothing succeeded.
pub fn run_trials(
    cfg: &HybridConfig,
    calib: &Calibration,
    env_cfg: &EnvConfig,
    space: &crate::design_space::DesignSpace,
) -> Result<HybridOutcome, HybridError> {
    cfg.validate().map_err(HybridError::InvalidConfig)?;
    let results: Vec<Vec<TrialOutput>> = (0..cfg.trial_max)
        .into_par_iter()
        .map(|trial| run_one_trial(trial, cfg, calib, env_cfg, space))
        .collect();

    let mut runs: Vec<TrialRun> = Vec::new();
    let mut failures: Vec<TrialFailure> = Vec::new();
    for per_trial in results {
        for (trial, outcome) in per_trial {
            match outcome {
                Ok(run) => runs.push(TrialRun { trial, run }),
                Err((optimizer, e)) => {
                    failures.push(TrialFailure { trial, optimizer, error: e.to_string() })
                }
            }
        }
    }
    if runs.is_empty() {
        return Err(HybridError::EmptyInput);
    }

    // Sequential fold in trial order, strict-greater, exactly as the trial loop.
    let mut best: Option<&TrialRun> = None;
    for tr in &runs {
        if best.map_or(true, |b| tr.run.best_obj > b.run.best_obj) {
            best = Some(tr);
        }
    }
    let best = best.expect("nonempty");
    Ok(HybridOutcome {
        best: best.run.clone(),
        provenance: Provenance { optimizer: best.run.kind, seed: best.run.seed, trial: best.trial },
        runs,
        failures,
    })
}

/// Pick the best run: highest objective, ties broken by lower packaging cost,
/// then lower per-op energy, then lexicographic action vector.
pub fn select_best<'a>(runs: &'a [OptimizerRun], calib: &Calibration) -> Result<&'a OptimizerRun, HybridError> {
    if runs.is_empty() {
        return Err(HybridError::EmptyInput);
    }
    let key = |r: &OptimizerRun| {
        let res = evaluate(&r.best_point, calib);
        (res.pkg_cost, res.e_op_pj)
    };
    let mut best = &runs[0];
    let mut best_key = key(best);
    for r in &runs[1..] {
        let better = if r.best_obj != best.best_obj {
            r.best_obj > best.best_obj
        } else {
            let k = key(r);
            if k.0 != best_key.0 {
                k.0 < best_key.0
            } else if k.1 != best_key.1 {
                k.1 < best_key.1
            } else {
                r.best_action < best.best_action
            }
        };
        if better {
            best_key = key(r);
            best = r;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design_space::DesignSpace;
    use crate::optimizer::TracePoint;

    fn mini_space() -> DesignSpace {
        let mut space = DesignSpace::with_chiplet_cap(64);
        for (name, v) in [
            ("arch_type", 2),
            ("n_chiplets", 60),
            ("hbm_placement", 30),
            ("ic_2p5d_ai", 1),
            ("links_2p5d_ai", 3100),
            ("trace_2p5d_ai", 1),
            ("ic_3d", 0),
            ("dr_3d", 42),
            ("links_3d", 3200),
            ("ic_2p5d_hbm", 1),
            ("links_2p5d_hbm", 4900),
        ] {
            space = space.pin(name, v).unwrap();
        }
        space
    }

    fn fake_run(kind: OptKind, seed: u64, best_obj: f64, action: Vec<usize>) -> OptimizerRun {
        let space = DesignSpace::with_chiplet_cap(64);
        OptimizerRun {
            kind,
            seed,
            best_point: space.decode(&action).unwrap(),
            best_action: action,
            best_obj,
            trace: vec![TracePoint { step: 0, value: best_obj, best_obj }],
        }
    }

    #[test]
    fn single_trial_keeps_the_max_of_both_optimizers() {
        let calib = Calibration::default();
        let cfg = HybridConfig {
            trial_max: 1,
            n_sa_runs: 1,
            n_rl_agents: 1,
            sa: SaConfig { t_max: 500, ..Default::default() },
            ppo: PpoConfig { n_steps: 64, minibatch: 16, n_epochs: 2, total_timesteps: 256, ..Default::default() },
            ..Default::default()
        };
        let out = run_trials(&cfg, &calib, &EnvConfig::default(), &mini_space()).unwrap();
        assert_eq!(out.runs.len(), 2);
        let max = out.runs.iter().map(|r| r.run.best_obj).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.best.best_obj, max);
        assert_eq!(out.provenance.optimizer, out.best.kind);
    }

    #[test]
    fn outcome_dominates_every_individual_run() {
        let calib = Calibration::default();
        let cfg = HybridConfig {
            trial_max: 3,
            n_sa_runs: 3,
            n_rl_agents: 2,
            sa: SaConfig { t_max: 300, ..Default::default() },
            ppo: PpoConfig { n_steps: 32, minibatch: 16, n_epochs: 1, total_timesteps: 64, ..Default::default() },
            ..Default::default()
        };
        let out = run_trials(&cfg, &calib, &EnvConfig::default(), &mini_space()).unwrap();
        assert_eq!(out.runs.len(), 5);
        for tr in &out.runs {
            assert!(out.best.best_obj >= tr.run.best_obj);
        }
    }

    #[test]
    fn fold_is_invariant_to_execution_order() {
        // The parallel collection already yields trial order; verify the fold
        // equals a sequential scan.
        let calib = Calibration::default();
        let cfg = HybridConfig {
            trial_max: 4,
            n_sa_runs: 4,
            n_rl_agents: 0,
            sa: SaConfig { t_max: 200, ..Default::default() },
            ..Default::default()
        };
        let out = run_trials(&cfg, &calib, &EnvConfig::default(), &mini_space()).unwrap();
        let mut best = f64::NEG_INFINITY;
        let mut who = None;
        for tr in &out.runs {
            if tr.run.best_obj > best {
                best = tr.run.best_obj;
                who = Some(tr.trial);
            }
        }
        assert_eq!(out.best.best_obj, best);
        assert_eq!(out.provenance.trial, who.unwrap());
    }

    #[test]
    fn select_best_breaks_ties_deterministically() {
        let calib = Calibration::default();
        assert!(matches!(select_best(&[], &calib), Err(HybridError::EmptyInput)));

        let a = fake_run(OptKind::Sa, 0, 5.0, vec![0; 14]);
        assert_eq!(select_best(&[a.clone()], &calib).unwrap().seed, 0);

        // Same objective; the cheaper package (fewer links) wins.
        let mut cheap_action = vec![0usize; 14];
        cheap_action[12] = 0; // 50 HBM links
        let mut costly_action = vec![0usize; 14];
        costly_action[12] = 99; // 5000 HBM links
        let cheap = fake_run(OptKind::Sa, 1, 5.0, cheap_action);
        let costly = fake_run(OptKind::Rl, 2, 5.0, costly_action);
        let runs = [costly, cheap];
        let picked = select_best(&runs, &calib).unwrap();
        assert_eq!(picked.seed, 1);
    }

    #[test]
    fn selection_is_monotone_under_union() {
        let calib = Calibration::default();
        let mut third = vec![0usize; 14];
        third[1] = 5;
        let runs = vec![
            fake_run(OptKind::Sa, 0, 3.0, vec![0; 14]),
            fake_run(OptKind::Sa, 1, 7.0, vec![1; 14]),
        ];
        let before = select_best(&runs, &calib).unwrap().best_obj;
        let mut more = runs.clone();
        more.push(fake_run(OptKind::Rl, 2, 9.0, third));
        let after = select_best(&more, &calib).unwrap().best_obj;
        assert!(after >= before);
    }

    #[test]
    fn duplicate_seeds_are_rejected() {
        let cfg = HybridConfig { seeds: vec![1, 1], ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
