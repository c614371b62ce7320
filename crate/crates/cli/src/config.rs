//! Layered settings: command-line flags, then a TOML file, then the
//! `FTSPROJ_SEED` environment variable (seed only), then built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use crate::csvio::HeaderMode;
use crate::UsageError;

pub const SEED_ENV: &str = "FTSPROJ_SEED";

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_MU: f64 = 0.2;
pub const DEFAULT_PERIODS: usize = 300;
pub const DEFAULT_PPP: usize = 48;
pub const DEFAULT_METHOD: &str = "ep";
pub const DEFAULT_METHODS: &str = "mean,naive,fknn,ep";
pub const DEFAULT_HOLDOUT: usize = 30;

/// Keys accepted in the config file. Every key is optional and applies to
/// whichever subcommands understand it.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub mu: Option<f64>,
    pub periods: Option<usize>,
    pub ppp: Option<usize>,
    pub method: Option<String>,
    pub methods: Option<String>,
    pub k: Option<usize>,
    pub theta: Option<String>,
    pub season: Option<usize>,
    pub threshold: Option<f64>,
    pub order: Option<String>,
    pub alpha: Option<f64>,
    pub folds: Option<usize>,
    pub holdout: Option<usize>,
    pub q: Option<f64>,
    pub h: Option<usize>,
    pub header: Option<HeaderMode>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
    }
}

/// Seed from the flag, the config file, the environment, or the default.
pub fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> Result<u64> {
    if let Some(s) = flag.or(file.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| UsageError(format!("{SEED_ENV}={v:?} is not an unsigned integer")).into()),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// Resolve a single layered value.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>, default: T) -> T {
    flag.or_else(|| file.clone()).unwrap_or(default)
}

/// Output path helper: `-` means stdout.
pub fn output_path(p: &Option<PathBuf>) -> Option<&Path> {
    p.as_deref().filter(|p| p.as_os_str() != "-")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_keys_parse_and_reject_unknowns() {
        let c: FileConfig = toml::from_str("seed = 3\nmethods = \"naive,ep\"\nheader = \"absent\"").unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.header, Some(HeaderMode::Absent));
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = FileConfig { holdout: Some(12), ..Default::default() };
        assert_eq!(pick(Some(5), &file.holdout, 30), 5);
        assert_eq!(pick(None, &file.holdout, 30), 12);
        assert_eq!(pick(None, &None, 30), 30);
    }
}
