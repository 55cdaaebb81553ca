use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use dss_core::assessment::TestPlan;
use serde::Deserialize;

/// Environment variables that override the config file.
pub const ENV_LISTEN: &str = "DSS_LISTEN";
pub const ENV_DATA_DIR: &str = "DSS_DATA_DIR";

/// Service configuration, read from TOML. Relative paths are taken
/// relative to the working directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    /// Session logs and snapshots live under `<data-dir>/sessions`.
    pub data_dir: PathBuf,
    pub bank: PathBuf,
    /// Extra rule files (`.clp`) and criteria files (`.ini`).
    #[serde(default)]
    pub kb: Vec<PathBuf>,
    /// Load the shipped student template, loader and Mathematics rule first.
    #[serde(default = "yes")]
    pub shipped_kb: bool,
    #[serde(default = "default_ability_seconds")]
    pub ability_seconds: i64,
    #[serde(default = "default_intelligence_seconds")]
    pub intelligence_seconds: i64,
    /// Fixed draw seed for every session (demos); random per session if unset.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Enables `POST /admin/reload-kb`.
    #[serde(default)]
    pub admin_token: Option<String>,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: u64,
}

fn default_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn yes() -> bool {
    true
}

fn default_ability_seconds() -> i64 {
    TestPlan::default().ability_seconds
}

fn default_intelligence_seconds() -> i64 {
    TestPlan::default().intelligence_seconds
}

fn default_snapshot_every() -> u64 {
    25
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    /// Reads the file and applies the environment overrides.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut config = Self::from_toml(&text)?;
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(listen) = var(ENV_LISTEN) {
            self.listen = listen
                .parse()
                .map_err(|e| ConfigError::Invalid(format!("{ENV_LISTEN}={listen}: {e}")))?;
        }
        if let Some(dir) = var(ENV_DATA_DIR) {
            self.data_dir = dir.into();
        }
        Ok(())
    }

    fn check(&self) -> Result<(), ConfigError> {
        if self.ability_seconds <= 0 || self.intelligence_seconds <= 0 {
            return Err(ConfigError::Invalid("phase durations must be positive".into()));
        }
        if self.snapshot_every == 0 {
            return Err(ConfigError::Invalid("snapshot-every must be at least 1".into()));
        }
        if self.admin_token.as_deref() == Some("") {
            return Err(ConfigError::Invalid("admin-token must not be empty".into()));
        }
        Ok(())
    }

    pub fn plan(&self) -> TestPlan {
        TestPlan {
            ability_seconds: self.ability_seconds,
            intelligence_seconds: self.intelligence_seconds,
        }
    }

    pub fn sessions_dir(&self) -> PathBuf {
        self.data_dir.join("sessions")
    }
}
