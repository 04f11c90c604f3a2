//! Service configuration: defaults, then a TOML file, then `HAZREG_*`
//! environment variables. Later sources win.

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use hazreg_core::domain::default_license_allowlist;
use hazreg_core::engine::DEFAULT_EMBARGO_DAYS;
use hazreg_core::stats::{DEFAULT_ALPHA, DEFAULT_THRESHOLD};
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "HAZREG_";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config file {path} is not valid TOML: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("environment variable {name}: {message}")]
    Env { name: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub bind: SocketAddr,
    pub data_dir: PathBuf,
    pub license_allowlist: BTreeSet<String>,
    /// Significance level for the panel's statistics.
    pub alpha: f64,
    /// Violation-rate threshold used when a card declares none.
    pub threshold: f64,
    pub embargo_days: i64,
    /// Advisories per feed page unless the caller asks for fewer.
    pub page_size: usize,
    /// Write a state snapshot every this many log entries; 0 disables.
    pub snapshot_every: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8750)),
            data_dir: PathBuf::from("hazreg-data"),
            license_allowlist: default_license_allowlist(),
            alpha: DEFAULT_ALPHA,
            threshold: DEFAULT_THRESHOLD,
            embargo_days: DEFAULT_EMBARGO_DAYS,
            page_size: 20,
            snapshot_every: 0,
        }
    }
}

fn env_value<T: std::str::FromStr>(
    env: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    let name = format!("{ENV_PREFIX}{key}");
    match env.get(&name) {
        None => Ok(None),
        Some(raw) => raw
            .trim()
            .parse()
            .map(Some)
            .map_err(|e: T::Err| ConfigError::Env {
                name,
                message: e.to_string(),
            }),
    }
}

impl Config {
    /// Parse a TOML document; missing keys keep their defaults.
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Resolve the effective configuration. `file` is optional; when absent,
    /// `HAZREG_CONFIG` may name one.
    pub fn load(file: Option<&Path>, env: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let from_env = env.get(&format!("{ENV_PREFIX}CONFIG")).map(PathBuf::from);
        let mut config = match file.map(Path::to_path_buf).or(from_env) {
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Read {
                    path: path.clone(),
                    source,
                })?;
                Self::from_toml(&text).map_err(|message| ConfigError::Parse { path, message })?
            }
            None => Self::default(),
        };
        config.apply_env(env)?;
        config.validate()?;
        Ok(config)
    }

    fn apply_env(&mut self, env: &BTreeMap<String, String>) -> Result<(), ConfigError> {
        if let Some(bind) = env_value(env, "BIND")? {
            self.bind = bind;
        }
        if let Some(dir) = env_value::<String>(env, "DATA_DIR")? {
            self.data_dir = dir.into();
        }
        if let Some(list) = env_value::<String>(env, "LICENSE_ALLOWLIST")? {
            self.license_allowlist = list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
        }
        if let Some(alpha) = env_value(env, "ALPHA")? {
            self.alpha = alpha;
        }
        if let Some(threshold) = env_value(env, "THRESHOLD")? {
            self.threshold = threshold;
        }
        if let Some(days) = env_value(env, "EMBARGO_DAYS")? {
            self.embargo_days = days;
        }
        if let Some(size) = env_value(env, "PAGE_SIZE")? {
            self.page_size = size;
        }
        if let Some(every) = env_value(env, "SNAPSHOT_EVERY")? {
            self.snapshot_every = every;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail("alpha must lie strictly between 0 and 1");
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return fail("threshold must lie in [0, 1)");
        }
        if self.embargo_days < 1 {
            return fail("embargo_days must be at least 1");
        }
        if self.page_size == 0 {
            return fail("page_size must be at least 1");
        }
        if self.license_allowlist.is_empty() {
            return fail("license_allowlist must not be empty");
        }
        if self.data_dir.as_os_str().is_empty() {
            return fail("data_dir must not be empty");
        }
        Ok(())
    }
}
