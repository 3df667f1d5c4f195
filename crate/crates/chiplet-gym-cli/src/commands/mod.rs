pub mod bench;
pub mod enumerate;
pub mod evaluate;
pub mod optimize;

use serde_json::{json, Value};

/// Shared manifest block written by every command that produces files.
pub fn manifest_value(
    command: &str,
    config_hash: &str,
    calib_path: Option<&std::path::Path>,
    outputs: &[String],
    wall_time_secs: f64,
) -> Value {
    json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_hash": config_hash,
        "calibration": calib_path.map(|p| p.display().to_string()),
        "outputs": outputs,
        "wall_time_secs": wall_time_secs,
    })
}
