use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: &str = "1";
pub const CONFIG_ENV: &str = "MPSKIT_CONFIG";
pub const MIN_DENSE_CAP: usize = 1 << 10;

/// Settings shared by every subcommand. Precedence: command-line flags, then
/// the TOML file named by `MPSKIT_CONFIG`, then these defaults.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RunConfig {
    pub tol_rank: f64,
    pub tau_iso: f64,
    pub tau_spec: f64,
    pub tol_e: f64,
    pub dense_cap: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub format_version: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tol_rank: 1e-12,
            tau_iso: 1e-10,
            tau_spec: mpskit::transfer::TAU_SPEC,
            tol_e: 1e-12,
            dense_cap: mpskit::mps::DEFAULT_DENSE_CAP,
            seed: 0,
            out: PathBuf::from("."),
            format_version: FORMAT_VERSION.to_string(),
        }
    }
}

/// Keys accepted in the config file; all optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub tol_rank: Option<f64>,
    pub tau_iso: Option<f64>,
    pub tau_spec: Option<f64>,
    pub tol_e: Option<f64>,
    pub dense_cap: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config file {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Malformed(format!("config file {}: {e}", path.display())))
    }
}

impl RunConfig {
    /// Layer the file and the flags over the defaults, then validate.
    pub fn resolve(file: Option<ConfigFile>, flags: &ConfigFile) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        for layer in file.iter().chain(std::iter::once(flags)) {
            if let Some(v) = layer.tol_rank {
                cfg.tol_rank = v;
            }
            if let Some(v) = layer.tau_iso {
                cfg.tau_iso = v;
            }
            if let Some(v) = layer.tau_spec {
                cfg.tau_spec = v;
            }
            if let Some(v) = layer.tol_e {
                cfg.tol_e = v;
            }
            if let Some(v) = layer.dense_cap {
                cfg.dense_cap = v;
            }
            if let Some(v) = layer.seed {
                cfg.seed = v;
            }
            if let Some(v) = &layer.out {
                cfg.out = v.clone();
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("tol_rank", self.tol_rank),
            ("tau_iso", self.tau_iso),
            ("tau_spec", self.tau_spec),
            ("tol_e", self.tol_e),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dense_cap < MIN_DENSE_CAP {
            return Err(CliError::Validation(format!(
                "dense cap must be at least {MIN_DENSE_CAP}, got {}",
                self.dense_cap
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: ConfigFile = toml::from_str("seed = 5\ntol_e = 1e-6\ndense_cap = 4096").unwrap();
        let flags = ConfigFile { seed: Some(9), ..Default::default() };
        let cfg = RunConfig::resolve(Some(file), &flags).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.tol_e, 1e-6);
        assert_eq!(cfg.dense_cap, 4096);
        assert_eq!(cfg.tau_iso, RunConfig::default().tau_iso);
    }

    #[test]
    fn rejects_bad_values() {
        let flags = ConfigFile { tau_iso: Some(0.0), ..Default::default() };
        assert!(matches!(RunConfig::resolve(None, &flags), Err(CliError::Validation(_))));
        let flags = ConfigFile { dense_cap: Some(512), ..Default::default() };
        assert!(matches!(RunConfig::resolve(None, &flags), Err(CliError::Validation(_))));
        assert!(toml::from_str::<ConfigFile>("bogus = 1").is_err());
    }
}
