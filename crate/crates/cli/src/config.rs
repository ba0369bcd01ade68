//! Defaults from `config.toml`, overridden by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;
use xcube_core::session::EngineConfig;

pub const CONFIG_FILE: &str = "config.toml";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub k: Option<usize>,
    pub radius_cap: Option<u32>,
    pub threshold: Option<f64>,
    pub max_terms: Option<usize>,
    pub session_ttl_secs: Option<u64>,
    pub addr: Option<String>,
    pub sequential: Option<bool>,
}

impl FileConfig {
    pub fn parse(text: &str) -> anyhow::Result<FileConfig> {
        Ok(toml::from_str(text)?)
    }

    /// Read `path`, or `<store>/config.toml` when no path is given. A missing
    /// default file is not an error.
    pub fn load(explicit: Option<&Path>, store: &Path) -> anyhow::Result<FileConfig> {
        let (path, required): (PathBuf, bool) = match explicit {
            Some(p) => (p.to_path_buf(), true),
            None => (store.join(CONFIG_FILE), false),
        };
        if !path.exists() {
            if required {
                anyhow::bail!("config file {} does not exist", path.display());
            }
            return Ok(FileConfig::default());
        }
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        FileConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Flag values that take precedence over the file.
#[derive(Clone, Copy, Debug, Default)]
pub struct FlagOverrides {
    pub k: Option<usize>,
    pub radius_cap: Option<u32>,
    pub threshold: Option<f64>,
}

pub fn engine_config(file: &FileConfig, flags: &FlagOverrides) -> EngineConfig {
    let d = EngineConfig::default();
    let mut cfg = EngineConfig {
        k: flags.k.or(file.k).unwrap_or(d.k),
        radius_cap: flags.radius_cap.or(file.radius_cap).unwrap_or(d.radius_cap),
        threshold: flags.threshold.or(file.threshold).unwrap_or(d.threshold),
        max_terms: file.max_terms.unwrap_or(d.max_terms),
        ttl_secs: file.session_ttl_secs.unwrap_or(d.ttl_secs),
        mode: d.mode,
    };
    if file.sequential == Some(true) {
        cfg.mode = xcube_core::par::ExecMode::Sequential;
    }
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beats_defaults() {
        let file = FileConfig::parse("k = 5\nradius_cap = 4\nthreshold = 0.6\n").unwrap();
        let cfg = engine_config(&file, &FlagOverrides { k: Some(7), ..Default::default() });
        assert_eq!((cfg.k, cfg.radius_cap, cfg.threshold), (7, 4, 0.6));
        let plain = engine_config(&FileConfig::default(), &FlagOverrides::default());
        assert_eq!(plain, EngineConfig::default());
        assert!(FileConfig::parse("bogus = 1").is_err());
    }
}
