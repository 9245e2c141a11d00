//! Run manifests and the fixed output layout.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const REPORT_FILE: &str = "report.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Merged file and flag configuration; replaying it reproduces the outputs.
    pub config: Value,
    /// The configuration with every `auto` value substituted.
    #[serde(default)]
    pub resolved: Value,
    pub version: String,
    /// Seconds since the Unix epoch, or `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
    /// SHA-256 of each input, keyed by name.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of each written output file.
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
    pub status: RunStatus,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

pub fn pretty_json(v: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Writes `name` under `dir` and records its hash.
pub fn write_output(
    dir: &Path,
    name: &str,
    contents: &str,
    hashes: &mut BTreeMap<String, String>,
) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    hashes.insert(name.to_string(), sha256_hex(contents.as_bytes()));
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading manifest {}", path.display()))?;
    serde_json::from_slice(&bytes).map_err(|e| {
        crate::config::ConfigError(format!("manifest {} is invalid: {e}", path.display())).into()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_round_trip() {
        let m = RunManifest {
            command: "indicial".into(),
            config: serde_json::json!({"n": 4}),
            resolved: serde_json::json!({"n": 4, "block": null}),
            version: "0.1.0".into(),
            timestamp: 7,
            inputs: BTreeMap::from([("config".into(), sha256_hex(b"{}"))]),
            outputs: BTreeMap::new(),
            status: RunStatus {
                ok: true,
                error: None,
                exit_code: 0,
            },
        };
        let s = pretty_json(&m).unwrap();
        assert_eq!(serde_json::from_str::<RunManifest>(&s).unwrap(), m);
    }
}
