//! `evaluate`: score one design point and compare it against the monolithic
//! baseline.

use std::path::Path;

use serde_json::{json, Value};

use chiplet_gym::design_space::{layout, DesignSpace};
use chiplet_gym::ppac::{die_yield, evaluate, monolithic_baseline};
use chiplet_gym::Calibration;

use crate::inputs::{self, input_err};
use crate::report;
use crate::CliError;

pub fn build_report(point_path: &Path, calib: &Calibration) -> Result<Value, CliError> {
    let dp = inputs::load_design_point(point_path)?;
    // Range-check the point against the full table.
    let space = DesignSpace::with_chiplet_cap(128);
    space
        .encode(&dp)
        .map_err(|e| input_err(format!("{}: {e}", point_path.display())))?;

    let res = evaluate(&dp, calib);
    let lay = layout(&dp);

    let comparison = if res.feasible {
        let mono = monolithic_baseline(calib.monolithic.area_mm2, calib);
        let chip_die_cost = calib.tech_node.unit_price_per_mm2 * res.area_per_chiplet_mm2
            / die_yield(res.area_per_chiplet_mm2, &calib.tech_node);
        json!({
            "monolithic": mono,
            "throughput_ratio": res.ops_per_sec_system / mono.ops_per_sec,
            "die_cost_ratio": mono.die_cost / chip_die_cost,
            "energy_efficiency_ratio": mono.e_op_pj / res.e_op_pj,
            "pkg_cost_ratio": res.pkg_cost / mono.pkg_cost,
        })
    } else {
        Value::Null
    };

    Ok(json!({
        "point": dp,
        "layout": lay,
        "ppac": res,
        "monolithic_comparison": comparison,
    }))
}

pub fn run(point_path: &Path, calib: &Calibration, out: Option<&Path>) -> Result<Vec<String>, CliError> {
    let report_value = build_report(point_path, calib)?;
    match out {
        Some(path) => {
            report::write_json_atomic(path, &report_value).map_err(CliError::Runtime)?;
            Ok(vec![path.display().to_string()])
        }
        None => {
            println!("{}", report::to_canonical_string(&report_value));
            Ok(vec![])
        }
    }
}
