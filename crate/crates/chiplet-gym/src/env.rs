//! Episodic environment exposing the PPAC model to optimizers: a 10-entry
//! normalized observation, full-design-point actions, the scalar reward, and
//! fixed-length episodes.
//!
//! Each step is an independent complete design proposal; the only cross-step
//! state is the step counter. Rewards are neither clipped nor whitened here,
//! so the same objective serves simulated annealing and exhaustive search.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calib::Calibration;
use crate::design_space::{feasible, DesignSpace, SpaceError};
use crate::ppac::{evaluate, PpacResult};

/// Observation width (policy-network input size).
pub const OBS_LEN: usize = 10;

/// Ten scalars, each min-max normalized to [0, 1] over design-space bounds:
/// max package area, max area per chiplet, current area per chiplet, AI-AI
/// latency, HBM-AI latency, communication energy, packaging cost, throughput,
/// chiplet count, architecture index.
pub type Observation = [f64; OBS_LEN];

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("episode exhausted: step called after done")]
    EpisodeExhausted,
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Which chiplet-count upper bound the environment searches under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseCap {
    #[serde(rename = "64")]
    Cap64,
    #[serde(rename = "128")]
    Cap128,
}

impl CaseCap {
    pub fn n_chiplets_max(self) -> u32 {
        match self {
            CaseCap::Cap64 => 64,
            CaseCap::Cap128 => 128,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub episode_len: u32,
    pub seed: u64,
    pub case: CaseCap,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig { episode_len: 2, seed: 0, case: CaseCap::Cap64 }
    }
}

/// Normalization bounds derived once from the calibration; observations clamp
/// into [0, 1] against them.
#[derive(Debug, Clone)]
struct ObsBounds {
    latency_ps: f64,
    e_comm_pj: f64,
    pkg_cost: f64,
    throughput: f64,
    n_chiplets: f64,
}

impl ObsBounds {
    fn new(calib: &Calibration) -> Self {
        let max_t_w = calib.interconnects.values().map(|ic| ic.t_w_ps).fold(0.0, f64::max);
        let max_hops = 128.0 + 1.0 - 2.0; // worst 1 x 128 mesh
        let latency_ps =
            max_hops * (max_t_w + calib.timing.t_r_ps) + calib.timing.t_c_ps + calib.timing.t_s_ps;
        let max_e_bit = calib.interconnects.values().map(|ic| ic.e_bit_max_pj).fold(0.0, f64::max);
        let bits_per_op =
            calib.model.n_operands as f64 * calib.model.data_width_bits as f64 / calib.model.reuse_factor;
        let worst_mu = calib
            .packaging_cost
            .mu
            .values()
            .map(|m| m.mu0 * calib.package.pkg_area_mm2 + m.mu1 * 10_000.0 + m.mu2)
            .fold(0.0, f64::max);
        let pkg_cost = 3.0 * worst_mu / calib.packaging_cost.assembly_bond_yield.powi(128);
        // Two full tiers of compute silicon at peak clock bound the throughput.
        let pe_bound = 2.0 * calib.package.pkg_area_mm2 * calib.package.area_split.compute
            / calib.tech_node.pe_area_mm2;
        let throughput = calib.tech_node.clock_hz / calib.tech_node.cycle_op * pe_bound * calib.model.u_chip;
        ObsBounds { latency_ps, e_comm_pj: max_e_bit * bits_per_op, pkg_cost, throughput, n_chiplets: 128.0 }
    }
}

/// The episodic environment. One instance is single-threaded; run independent
/// instances (distinct seeds) for parallel farms.
pub struct ChipletGymEnv {
    space: DesignSpace,
    calib: Calibration,
    cfg: EnvConfig,
    bounds: ObsBounds,
    step_count: u32,
    steps_total: u64,
    last_obs: Observation,
    trace_sink: Option<std::sync::Mutex<Box<dyn Write + Send>>>,
}

impl ChipletGymEnv {
    pub fn new(calib: Calibration, cfg: EnvConfig) -> Self {
        let mut calib = calib;
        calib.package.n_chiplets_max = cfg.case.n_chiplets_max();
        let space = DesignSpace::with_chiplet_cap(cfg.case.n_chiplets_max());
        let bounds = ObsBounds::new(&calib);
        let mut env = ChipletGymEnv {
            space,
            calib,
            cfg,
            bounds,
            step_count: 0,
            steps_total: 0,
            last_obs: [0.0; OBS_LEN],
            trace_sink: None,
        };
        env.last_obs = env.neutral_obs();
        env
    }

    /// Replace the search space (used for restricted-space oracles). The
    /// space must stay within the calibration's chiplet cap.
    pub fn with_space(mut self, space: DesignSpace) -> Self {
        self.space = space;
        self
    }

    /// Stream `step,reward,feasible,<14 action indices>` rows for every step.
    pub fn set_trace_sink(&mut self, mut sink: Box<dyn Write + Send>) {
        let _ = writeln!(
            sink,
            "step,reward,feasible,{}",
            crate::design_space::PARAM_NAMES.map(|n| format!("idx_{n}")).join(",")
        );
        self.trace_sink = Some(std::sync::Mutex::new(sink));
    }

    pub fn space(&self) -> &DesignSpace {
        &self.space
    }

    pub fn calib(&self) -> &Calibration {
        &self.calib
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn episode_len(&self) -> u32 {
        self.cfg.episode_len
    }

    /// Canonical neutral state: metric entries zero, area entries at their
    /// constraint values.
    fn neutral_obs(&self) -> Observation {
        let mut obs = [0.0; OBS_LEN];
        obs[0] = 1.0;
        obs[1] = self.calib.package.max_area_per_chiplet_mm2 / self.calib.package.pkg_area_mm2;
        obs
    }

    fn observe(&self, res: &PpacResult, n_chiplets: u32, arch_index: usize) -> Observation {
        let pc = &self.calib.package;
        let b = &self.bounds;
        let clamp = |v: f64| {
            debug_assert!(v.is_finite());
            v.clamp(0.0, 1.0)
        };
        [
            1.0,
            clamp(pc.max_area_per_chiplet_mm2 / pc.pkg_area_mm2),
            clamp(res.area_per_chiplet_mm2 / pc.pkg_area_mm2),
            clamp(res.l_ai_ai_ps / b.latency_ps),
            clamp(res.l_hbm_ai_ps / b.latency_ps),
            clamp(res.e_comm_per_op_pj / b.e_comm_pj),
            clamp(res.pkg_cost / b.pkg_cost),
            clamp(res.ops_per_sec_system / b.throughput),
            clamp(n_chiplets as f64 / b.n_chiplets),
            clamp(arch_index as f64 / 2.0),
        ]
    }

    /// Start a new episode. Deterministic: the seed only tags the trajectory.
    pub fn reset(&mut self, seed: u64) -> Observation {
        self.cfg.seed = seed;
        self.step_count = 0;
        self.last_obs = self.neutral_obs();
        self.last_obs
    }

    /// Decode and evaluate one complete design proposal.
    pub fn step(&mut self, action: &[usize]) -> Result<(Observation, f64, bool), EnvError> {
        if self.step_count >= self.cfg.episode_len {
            return Err(EnvError::EpisodeExhausted);
        }
        let dp = self.space.decode(action)?;
        let res = evaluate(&dp, &self.calib);
        self.step_count += 1;
        self.steps_total += 1;
        let done = self.step_count == self.cfg.episode_len;
        let obs = self.observe(&res, dp.n_chiplets, dp.arch_type.index());
        self.last_obs = obs;
        if let Some(sink) = &self.trace_sink {
            let idx: Vec<String> = action.iter().map(|i| i.to_string()).collect();
            let mut sink = sink.lock().expect("trace sink lock");
            let _ = writeln!(sink, "{},{},{},{}", self.steps_total, res.reward, res.feasible, idx.join(","));
        }
        Ok((obs, res.reward, done))
    }

    /// Stateless objective for annealing and enumeration: decode, evaluate,
    /// return the reward (infeasible points already carry the penalty).
    pub fn objective(&self, action: &[usize]) -> f64 {
        match self.space.decode(action) {
            Ok(dp) => evaluate(&dp, &self.calib).reward,
            Err(_) => -self.calib.model.infeasible_penalty,
        }
    }

    /// Full evaluation of an action, bypassing episode bookkeeping.
    pub fn evaluate_action(&self, action: &[usize]) -> Result<PpacResult, EnvError> {
        let dp = self.space.decode(action)?;
        Ok(evaluate(&dp, &self.calib))
    }

    /// Feasibility-only check of an action.
    pub fn feasible_action(&self, action: &[usize]) -> Result<bool, EnvError> {
        let dp = self.space.decode(action)?;
        Ok(feasible(&dp, &self.calib.package).feasible)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ref60_action() -> Vec<usize> {
        vec![2, 59, 29, 1, 19, 61, 0, 0, 22, 31, 1, 19, 97, 0]
    }

    fn env() -> ChipletGymEnv {
        ChipletGymEnv::new(Calibration::default(), EnvConfig::default())
    }

    #[test]
    fn reset_is_deterministic_and_normalized() {
        let mut e = env();
        let a = e.reset(7);
        let b = e.reset(7);
        assert_eq!(a, b);
        assert_eq!(a.len(), OBS_LEN);
        assert!(a.iter().all(|v| (0.0..=1.0).contains(v) && v.is_finite()));
    }

    #[test]
    fn step_reward_matches_evaluate_and_episode_ends_at_len_2() {
        let mut e = env();
        e.reset(0);
        let expected = e.evaluate_action(&ref60_action()).unwrap().reward;
        let (obs, r1, done1) = e.step(&ref60_action()).unwrap();
        assert_eq!(r1, expected);
        assert!(!done1);
        assert!(obs.iter().all(|v| (0.0..=1.0).contains(v)));
        let (_, r2, done2) = e.step(&ref60_action()).unwrap();
        assert_eq!(r2, r1);
        assert!(done2);
        assert_eq!(e.step(&ref60_action()).unwrap_err(), EnvError::EpisodeExhausted);
    }

    #[test]
    fn infeasible_actions_pass_through_the_penalty() {
        let mut e = env();
        e.reset(0);
        let mut a = vec![0usize; 14];
        a[2] = 31; // stacked HBM under 2.5D
        let (_, r, _) = e.step(&a).unwrap();
        assert_eq!(r, -1000.0);
    }

    #[test]
    fn rewards_are_stateless_across_steps_and_episodes() {
        let mut e = env();
        let mut seen = Vec::new();
        for ep in 0..3 {
            e.reset(ep);
            for _ in 0..2 {
                let (_, r, _) = e.step(&ref60_action()).unwrap();
                seen.push(r);
            }
        }
        assert!(seen.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn observation_reflects_the_evaluated_point() {
        let mut e = env();
        e.reset(0);
        let res = e.evaluate_action(&ref60_action()).unwrap();
        let (obs, _, _) = e.step(&ref60_action()).unwrap();
        let pc = e.calib().package.clone();
        assert!((obs[2] - res.area_per_chiplet_mm2 / pc.pkg_area_mm2).abs() < 1e-12);
        assert!((obs[8] - 60.0 / 128.0).abs() < 1e-12);
        assert!((obs[9] - 1.0).abs() < 1e-12);
        assert!(obs[7] > 0.0);
    }

    #[test]
    fn episode_return_is_the_sum_of_step_rewards() {
        let mut e = env();
        e.reset(0);
        let (_, r1, _) = e.step(&ref60_action()).unwrap();
        let (_, r2, done) = e.step(&ref60_action()).unwrap();
        assert!(done);
        let ret = r1 + r2;
        // Mean cost-model value equals the episodic return over the length.
        assert!((ret / 2.0 - r1).abs() < 1e-12);
    }

    #[test]
    fn trace_sink_records_step_rows() {
        let mut e = env();
        let buf: Vec<u8> = Vec::new();
        let shared = std::sync::Arc::new(std::sync::Mutex::new(buf));
        struct SharedWriter(std::sync::Arc<std::sync::Mutex<Vec<u8>>>);
        impl Write for SharedWriter {
            fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
                self.0.lock().unwrap().extend_from_slice(b);
                Ok(b.len())
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        e.set_trace_sink(Box::new(SharedWriter(shared.clone())));
        e.reset(0);
        e.step(&ref60_action()).unwrap();
        let text = String::from_utf8(shared.lock().unwrap().clone()).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("step,reward,feasible,"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("1,"));
        assert!(row.contains(",true,"));
        assert_eq!(row.split(',').count(), 3 + 14);
    }

    #[test]
    fn case_cap_restricts_the_space() {
        let e64 = ChipletGymEnv::new(Calibration::default(), EnvConfig { case: CaseCap::Cap64, ..Default::default() });
        assert_eq!(e64.space().cardinalities()[1], 64);
        let e128 =
            ChipletGymEnv::new(Calibration::default(), EnvConfig { case: CaseCap::Cap128, ..Default::default() });
        assert_eq!(e128.space().cardinalities()[1], 128);
    }
}
