//! Shared optimizer plumbing: seeded run records, best-so-far traces, CSV
//! emission, and exhaustive enumeration of restricted spaces (the oracle the
//! stochastic optimizers are checked against).

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design_space::{DesignPoint, DesignSpace};

/// Which optimizer produced a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptKind {
    Sa,
    Rl,
    Hybrid,
}

impl OptKind {
    /// Header of the emitted trace CSV.
    pub fn trace_header(self) -> &'static str {
        match self {
            OptKind::Sa => "iteration,current_obj,best_obj",
            OptKind::Rl => "timestep,mean_episodic_reward,best_obj",
            OptKind::Hybrid => "trial,trial_obj,best_obj",
        }
    }
}

/// One trace record: (step, step-local value, best objective so far).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub step: u64,
    pub value: f64,
    pub best_obj: f64,
}

/// Result of one seeded optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerRun {
    pub kind: OptKind,
    pub seed: u64,
    pub best_point: DesignPoint,
    pub best_action: Vec<usize>,
    pub best_obj: f64,
    pub trace: Vec<TracePoint>,
}

impl OptimizerRun {
    /// Emit the trace as CSV with the kind's documented header.
    pub fn write_trace_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", self.kind.trace_header())?;
        for p in &self.trace {
            writeln!(w, "{},{},{}", p.step, p.value, p.best_obj)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EnumerateError {
    #[error("restricted space has {points:.3e} points, over the {max:.3e}-point guard")]
    SpaceTooLarge { points: f64, max: f64 },
}

/// Hard guard on exhaustive enumeration.
pub const ENUMERATE_GUARD: f64 = 1e6;

/// Visit every action vector of the space in mixed-radix order.
pub fn for_each_action(space: &DesignSpace, mut visit: impl FnMut(&[usize])) {
    let cards = space.cardinalities();
    let mut action = vec![0usize; cards.len()];
    loop {
        visit(&action);
        let mut i = cards.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            action[i] += 1;
            if action[i] < cards[i] {
                break;
            }
            action[i] = 0;
        }
    }
}

/// Exhaustively evaluate a restricted space and rank all points by objective,
/// best first. Ties order lexicographically by action vector, so the ranking
/// is deterministic.
pub fn rank_space(
    space: &DesignSpace,
    objective: impl Fn(&[usize]) -> f64,
) -> Result<Vec<(Vec<usize>, f64)>, EnumerateError> {
    let points = space.total_points();
    if points > ENUMERATE_GUARD {
        return Err(EnumerateError::SpaceTooLarge { points, max: ENUMERATE_GUARD });
    }
    let mut ranked = Vec::with_capacity(points as usize);
    for_each_action(space, |action| {
        ranked.push((action.to_vec(), objective(action)));
    });
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_space() -> DesignSpace {
        let mut space = DesignSpace::table_default();
        for (i, name) in crate::design_space::PARAM_NAMES.iter().enumerate() {
            if i == 4 || i == 6 {
                continue; // leave dr_2p5d_ai and trace_2p5d_ai free
            }
            let v = space.params()[i].values[0];
            space = space.pin(name, v).unwrap();
        }
        space
    }

    #[test]
    fn enumeration_visits_every_point_once() {
        let space = tiny_space();
        let mut count = 0usize;
        for_each_action(&space, |_| count += 1);
        assert_eq!(count as f64, space.total_points());
        assert_eq!(count, 200);
    }

    #[test]
    fn ranked_output_is_sorted_and_complete() {
        let space = tiny_space();
        let ranked = rank_space(&space, |a| -((a[4] as f64 - 7.0).powi(2)) - a[6] as f64).unwrap();
        assert_eq!(ranked.len(), 200);
        assert!(ranked.windows(2).all(|w| w[0].1 >= w[1].1));
        assert_eq!(ranked[0].0[4], 7);
        assert_eq!(ranked[0].0[6], 0);
    }

    #[test]
    fn oversized_spaces_are_refused() {
        let space = DesignSpace::table_default();
        assert!(matches!(rank_space(&space, |_| 0.0), Err(EnumerateError::SpaceTooLarge { .. })));
    }

    #[test]
    fn single_point_space_yields_one_row() {
        let mut space = tiny_space();
        space = space.pin("dr_2p5d_ai", 3).unwrap();
        space = space.pin("trace_2p5d_ai", 2).unwrap();
        let ranked = rank_space(&space, |_| 42.0).unwrap();
        assert_eq!(ranked.len(), 1);
    }

    #[test]
    fn trace_csv_has_the_documented_header() {
        let space = DesignSpace::table_default();
        let dp = space.decode(&[0; 14]).unwrap();
        let run = OptimizerRun {
            kind: OptKind::Sa,
            seed: 1,
            best_point: dp,
            best_action: vec![0; 14],
            best_obj: 1.5,
            trace: vec![TracePoint { step: 1, value: 1.5, best_obj: 1.5 }],
        };
        let mut buf = Vec::new();
        run.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,current_obj,best_obj\n"));
        assert_eq!(text.lines().count(), 2);
    }
}
