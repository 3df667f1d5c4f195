//! `enumerate`: exhaustively rank a restricted design space. This is the
//! oracle the stochastic optimizers are validated against; the full space is
//! far beyond enumeration, so a hard point-count guard applies.

use std::fmt::Write as _;
use std::path::Path;

use chiplet_gym::design_space::DesignSpace;
use chiplet_gym::env::{CaseCap, ChipletGymEnv, EnvConfig};
use chiplet_gym::optimizer::rank_space;
use chiplet_gym::Calibration;

use crate::inputs::input_err;
use crate::report;
use crate::CliError;

pub const RANKED_CSV_HEADER: &str = "rank,reward,arch_type,n_chiplets,hbm_placement,ic_2p5d_ai,dr_2p5d_ai,links_2p5d_ai,trace_2p5d_ai,ic_3d,dr_3d,links_3d,ic_2p5d_hbm,dr_2p5d_hbm,links_2p5d_hbm,trace_2p5d_hbm";

pub fn run(
    space: DesignSpace,
    calib: &Calibration,
    case: CaseCap,
    out: &Path,
) -> Result<Vec<String>, CliError> {
    let env = ChipletGymEnv::new(calib.clone(), EnvConfig { case, ..Default::default() })
        .with_space(space.clone());
    let ranked = rank_space(&space, |a| env.objective(a)).map_err(|e| input_err(e.to_string()))?;

    let mut csv = String::with_capacity(ranked.len() * 64);
    csv.push_str(RANKED_CSV_HEADER);
    csv.push('\n');
    for (rank, (action, reward)) in ranked.iter().enumerate() {
        let dp = space.decode(action).expect("enumerated actions are in-space");
        let arch = serde_json::to_value(dp.arch_type).unwrap();
        let ic = |v: serde_json::Value| v.as_str().unwrap().to_string();
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            rank + 1,
            reward,
            arch.as_str().unwrap(),
            dp.n_chiplets,
            dp.hbm_placement.code(),
            ic(serde_json::to_value(dp.ic_2p5d_ai).unwrap()),
            dp.dr_2p5d_ai,
            dp.links_2p5d_ai,
            dp.trace_2p5d_ai,
            ic(serde_json::to_value(dp.ic_3d).unwrap()),
            dp.dr_3d,
            dp.links_3d,
            ic(serde_json::to_value(dp.ic_2p5d_hbm).unwrap()),
            dp.dr_2p5d_hbm,
            dp.links_2p5d_hbm,
            dp.trace_2p5d_hbm,
        )
        .expect("string writes cannot fail");
    }
    report::write_atomic(out, csv.as_bytes()).map_err(CliError::Runtime)?;
    Ok(vec![out.display().to_string()])
}
