//! `bench`: per-workload inferences/sec and inferences/joule for a design
//! point and the monolithic baseline, as JSON plus a flat CSV suitable for
//! bar charts.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use chiplet_gym::design_space::DesignSpace;
use chiplet_gym::ppac::{evaluate, monolithic_baseline};
use chiplet_gym::workloads::{tasks_per_joule, tasks_per_sec, Workload};
use chiplet_gym::Calibration;

use crate::inputs::{self, input_err};
use crate::report;
use crate::CliError;

pub const BENCH_CSV_HEADER: &str = "system,workload,metric,value";

pub fn run(
    point_path: &Path,
    calib: &Calibration,
    workloads: &[Workload],
    out_dir: &Path,
) -> Result<Vec<String>, CliError> {
    let dp = inputs::load_design_point(point_path)?;
    DesignSpace::with_chiplet_cap(128)
        .encode(&dp)
        .map_err(|e| input_err(format!("{}: {e}", point_path.display())))?;
    let res = evaluate(&dp, calib);
    if !res.feasible {
        return Err(input_err("design point is infeasible; nothing to benchmark"));
    }
    let mono = monolithic_baseline(calib.monolithic.area_mm2, calib);

    let mut csv = String::new();
    csv.push_str(BENCH_CSV_HEADER);
    csv.push('\n');
    let mut rows: Vec<Value> = Vec::new();
    for w in workloads {
        let chip_tps = tasks_per_sec(res.ops_per_sec_system, w);
        let chip_tpj = tasks_per_joule(res.e_op_pj, w);
        let mono_tps = tasks_per_sec(mono.ops_per_sec, w);
        let mono_tpj = tasks_per_joule(mono.e_op_pj, w);
        for (system, tps, tpj) in [("chiplet", chip_tps, chip_tpj), ("monolithic", mono_tps, mono_tpj)] {
            writeln!(csv, "{system},{},inferences_per_sec,{tps}", w.name).unwrap();
            writeln!(csv, "{system},{},inferences_per_joule,{tpj}", w.name).unwrap();
        }
        rows.push(json!({
            "workload": w.name,
            "chiplet": { "inferences_per_sec": chip_tps, "inferences_per_joule": chip_tpj },
            "monolithic": { "inferences_per_sec": mono_tps, "inferences_per_joule": mono_tpj },
            "throughput_ratio": chip_tps / mono_tps,
            "energy_efficiency_ratio": chip_tpj / mono_tpj,
        }));
    }

    let report_value = json!({
        "point": dp,
        "system_ops_per_sec": res.ops_per_sec_system,
        "e_op_pj": res.e_op_pj,
        "monolithic": mono,
        "workloads": rows,
    });

    let json_path = out_dir.join("bench_report.json");
    let csv_path = out_dir.join("bench.csv");
    report::write_json_atomic(&json_path, &report_value).map_err(CliError::Runtime)?;
    report::write_atomic(&csv_path, csv.as_bytes()).map_err(CliError::Runtime)?;
    Ok(vec![json_path.display().to_string(), csv_path.display().to_string()])
}
