//! Run manifests and schema versioning. Every command writes a
//! `<stem>.manifest.json` next to its output recording the command name, the
//! fully resolved configuration, the seed (when randomness is involved), the
//! toolkit version, and a timestamp — enough to reproduce the output
//! byte-for-byte, timestamps aside.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Version stamped into every JSON payload this tool emits. Readers accept
/// any minor revision of the same major version and reject the rest.
pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub version: &'static str,
    pub timestamp: String,
    pub seed: Option<u64>,
    pub config: Value,
}

impl RunManifest {
    pub fn new(command: &'static str, seed: Option<u64>, config: Value) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            command,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            seed,
            config,
        }
    }

    /// Writes `<stem>.manifest.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        let path = dir.join(format!("{stem}.manifest.json"));
        write_json(&path, self)
    }
}

/// Serializes `payload` as pretty JSON with a trailing newline. Payloads
/// carry no timestamps, so identical inputs give identical bytes.
pub fn write_json<T: Serialize>(path: &Path, payload: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(payload)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Pops an optional `schema_version` key from a JSON object and rejects
/// unknown major versions. Files written before versioning (no key) are
/// treated as the current major.
pub fn take_schema_version(value: &mut Value) -> Result<()> {
    let Some(obj) = value.as_object_mut() else {
        bail!("expected a JSON object at the top level");
    };
    let Some(v) = obj.remove("schema_version") else {
        return Ok(());
    };
    let Some(text) = v.as_str() else {
        bail!("schema_version must be a string like \"{SCHEMA_VERSION}\"");
    };
    let major = text.split('.').next().unwrap_or("");
    let supported = SCHEMA_VERSION.split('.').next().unwrap_or("");
    if major != supported {
        bail!("unsupported schema_version `{text}` (this tool reads major version {supported})");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn schema_version_accepts_same_major_and_missing_key() {
        for v in [json!({}), json!({"schema_version": "1.0"}), json!({"schema_version": "1.7"})] {
            let mut v = v;
            take_schema_version(&mut v).unwrap();
            assert!(v.get("schema_version").is_none());
        }
    }

    #[test]
    fn schema_version_rejects_other_majors_and_non_strings() {
        let mut v = json!({"schema_version": "2.0"});
        assert!(take_schema_version(&mut v).is_err());
        let mut v = json!({"schema_version": 1});
        assert!(take_schema_version(&mut v).is_err());
        let mut v = json!([1, 2]);
        assert!(take_schema_version(&mut v).is_err());
    }
}
