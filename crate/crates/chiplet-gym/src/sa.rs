//! Modified simulated annealing over the index space.
//!
//! The acceptance rule is not the Metropolis criterion: a candidate is
//! accepted when it improves on the current objective, or with probability
//! `t = temperature / iteration`. Early iterations (t >= 1) accept
//! everything, so the walk starts as pure exploration and anneals into a
//! greedy hill-climb.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::design_space::DesignSpace;
use crate::optimizer::{OptKind, OptimizerRun, TracePoint};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SaConfig {
    pub t_max: u64,
    pub temperature: f64,
    /// Neighbor step size, in index units per coordinate.
    pub step_size: u32,
    pub seed: u64,
    /// Keep every `trace_stride`-th iteration in the trace (improvements are
    /// always kept). 0 means only improvements.
    pub trace_stride: u64,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig { t_max: 500_000, temperature: 200.0, step_size: 10, seed: 0, trace_stride: 1000 }
    }
}

/// Perturb every coordinate by `round(u * step)` with u ~ uniform(-1, 1),
/// clamped to the coordinate's index range. One RNG draw per coordinate, in
/// order, so traces are reproducible bit for bit.
pub fn neighbor(x: &[usize], step_size: u32, cards: &[usize], rng: &mut impl Rng) -> Vec<usize> {
    x.iter()
        .zip(cards)
        .map(|(&xi, &card)| {
            let u: f64 = rng.gen_range(-1.0..1.0);
            let delta = (u * step_size as f64).round() as i64;
            (xi as i64 + delta).clamp(0, card as i64 - 1) as usize
        })
        .collect()
}

/// Acceptance rule: improvement, or `rand() < temperature / iteration`.
/// The random draw happens only when the candidate does not improve.
pub fn accept(o_cand: f64, o_curr: f64, iteration: u64, temperature: f64, rng: &mut impl Rng) -> bool {
    debug_assert!(iteration >= 1);
    o_cand > o_curr || rng.gen::<f64>() < temperature / iteration as f64
}

/// Run annealing: a uniform random initial solution, then exactly `t_max`
/// candidate evaluations. Deterministic per seed.
pub fn run(objective: impl Fn(&[usize]) -> f64, space: &DesignSpace, cfg: &SaConfig) -> OptimizerRun {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cards = space.cardinalities();

    let mut x_curr = space.sample(&mut rng);
    let mut o_curr = objective(&x_curr);
    let mut x_best = x_curr.clone();
    let mut o_best = o_curr;

    let mut trace = vec![TracePoint { step: 0, value: o_curr, best_obj: o_best }];
    for iteration in 1..=cfg.t_max {
        let x_cand = neighbor(&x_curr, cfg.step_size, &cards, &mut rng);
        let o_cand = objective(&x_cand);
        let improved_best = o_cand > o_best;
        if improved_best {
            o_best = o_cand;
            x_best = x_cand.clone();
        }
        if accept(o_cand, o_curr, iteration, cfg.temperature, &mut rng) {
            x_curr = x_cand;
            o_curr = o_cand;
        }
        if improved_best || (cfg.trace_stride > 0 && iteration % cfg.trace_stride == 0) {
            trace.push(TracePoint { step: iteration, value: o_curr, best_obj: o_best });
        }
    }

    OptimizerRun {
        kind: OptKind::Sa,
        seed: cfg.seed,
        best_point: space.decode(&x_best).expect("best action stays in-space"),
        best_action: x_best,
        best_obj: o_best,
        trace,
    }
}
