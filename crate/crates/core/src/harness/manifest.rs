//! Run manifest: a small JSON record of what produced the artifacts in an
//! output directory.

use crate::harness::config::{ScenarioConfig, fnv1a};
use serde_json::json;

/// JSON manifest with the invoking command line, a hash of the resolved
/// configuration, the effective seed and tool/format versions. Contains no
/// timestamps, so identical runs write identical manifests.
pub fn run_manifest(command_line: &[String], cfg: &ScenarioConfig) -> String {
    let config_text = cfg.save_string();
    let value = json!({
        "command": command_line,
        "config_fnv1a": format!("{:#018x}", fnv1a(config_text.as_bytes())),
        "scenario_fingerprint": format!("{:#018x}", cfg.fingerprint()),
        "seed": cfg.seed,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "checkpoint_format": 1,
    });
    let mut out = serde_json::to_string_pretty(&value).expect("manifest serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_is_deterministic_and_tracks_config() {
        let cfg = ScenarioConfig::desk();
        let cmd = vec!["tmirs".to_string(), "train".to_string()];
        let a = run_manifest(&cmd, &cfg);
        let b = run_manifest(&cmd, &cfg);
        assert_eq!(a, b);
        assert!(a.contains("\"seed\": 0"));
        assert!(a.contains("config_fnv1a"));
        let mut other = cfg.clone();
        other.seed = 5;
        assert_ne!(run_manifest(&cmd, &other), a);
    }
}
