//! Canonical JSON output, config hashing, and atomic file writes.
//!
//! Canonical form: keys sorted (the default map), floats rounded to 9
//! significant digits then printed in shortest round-trip form. Hashes and
//! re-serializations of the same data are therefore stable.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde_json::{Number, Value};
use sha2::{Digest, Sha256};

/// Round to 9 significant digits; idempotent.
fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let digits = 9 - 1 - x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits);
    (x * factor).round() / factor
}

/// Recursively canonicalize all float values.
pub fn canonicalize(v: &Value) -> Value {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    return Number::from_f64(round_sig(f)).map(Value::Number).unwrap_or(Value::Null);
                }
            }
            v.clone()
        }
        Value::Array(items) => Value::Array(items.iter().map(canonicalize).collect()),
        Value::Object(map) => Value::Object(map.iter().map(|(k, val)| (k.clone(), canonicalize(val))).collect()),
        _ => v.clone(),
    }
}

pub fn to_canonical_string(v: &Value) -> String {
    serde_json::to_string_pretty(&canonicalize(v)).expect("canonical values serialize")
}

/// Hex SHA-256 of the canonical serialization.
pub fn config_hash(v: &Value) -> String {
    let bytes = Sha256::digest(to_canonical_string(v).as_bytes());
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Whole-file atomic write: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json_atomic(path: &Path, v: &Value) -> anyhow::Result<()> {
    let mut text = to_canonical_string(v);
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounding_is_idempotent_and_9_digits() {
        let v = json!({ "x": 0.123456789123456789, "y": 26.1, "n": 42, "z": 1.0e-300 });
        let once = to_canonical_string(&v);
        let again = to_canonical_string(&serde_json::from_str(&once).unwrap());
        assert_eq!(once, again);
        assert!(once.contains("0.123456789"));
        assert!(once.contains("26.1"));
    }

    #[test]
    fn hash_is_stable_across_reserialization() {
        let v = json!({ "b": [1.5, 2.25], "a": { "k": 0.30000000000000004 } });
        let h1 = config_hash(&v);
        let round: Value = serde_json::from_str(&to_canonical_string(&v)).unwrap();
        assert_eq!(h1, config_hash(&round));
        assert_eq!(h1.len(), 64);
    }
}
