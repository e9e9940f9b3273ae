//! Service configuration: a TOML file with environment overrides.
//!
//! ```toml
//! bind = "127.0.0.1"
//! port = 8080
//! data_dir = "data"
//! script_dir = "scripts"
//!
//! [timing]
//! heartbeat_s = 10
//! idle_expiry_s = 900
//!
//! [llm]
//! followups = "template"   # or "generative"
//! pipeline = "mock"        # or "live"
//! ```
//!
//! Relative paths resolve against the config file's directory.
//! `INTERVIEWER_BIND`, `INTERVIEWER_PORT`, `INTERVIEWER_DATA_DIR` and
//! `INTERVIEWER_SCRIPT_DIR` override the file; model endpoint settings come
//! from the `INTERVIEWER_LLM_*` variables.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

pub const ENV_BIND: &str = "INTERVIEWER_BIND";
pub const ENV_PORT: &str = "INTERVIEWER_PORT";
pub const ENV_DATA_DIR: &str = "INTERVIEWER_DATA_DIR";
pub const ENV_SCRIPT_DIR: &str = "INTERVIEWER_SCRIPT_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {source}", .path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", .path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{name}: {message}")]
    Env { name: &'static str, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FollowupSetting {
    #[default]
    Template,
    Generative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PipelineModelSetting {
    #[default]
    Mock,
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LlmSettings {
    #[serde(default)]
    pub followups: FollowupSetting,
    #[serde(default)]
    pub pipeline: PipelineModelSetting,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingConfig {
    pub heartbeat_s: f64,
    /// A session with no participant events for this long is closed as
    /// incomplete.
    pub idle_expiry_s: f64,
    /// How often session timers are checked.
    pub tick_ms: u64,
    /// Session milliseconds per wall-clock millisecond. Values above 1
    /// shorten every turn timeout proportionally; meant for tests.
    pub clock_rate: f64,
    /// Silence turns injected in a row before the service waits for the
    /// participant (or idle expiry) instead.
    pub max_auto_silences: u32,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            heartbeat_s: 10.0,
            idle_expiry_s: 900.0,
            tick_ms: 100,
            clock_rate: 1.0,
            max_auto_silences: 2,
        }
    }
}

fn default_bind() -> String {
    "127.0.0.1".into()
}

fn default_port() -> u16 {
    8080
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    /// 0 picks a free port.
    #[serde(default = "default_port")]
    pub port: u16,
    pub data_dir: PathBuf,
    pub script_dir: PathBuf,
    /// Also offer the script shipped with the core crate.
    #[serde(default = "default_true")]
    pub builtin_script: bool,
    #[serde(default)]
    pub timing: TimingConfig,
    #[serde(default)]
    pub llm: LlmSettings,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>, script_dir: impl Into<PathBuf>) -> Self {
        Self {
            bind: default_bind(),
            port: 0,
            data_dir: data_dir.into(),
            script_dir: script_dir.into(),
            builtin_script: true,
            timing: TimingConfig::default(),
            llm: LlmSettings::default(),
        }
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut config: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for dir in [&mut config.data_dir, &mut config.script_dir] {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(config)
    }

    /// Read `path`, then apply overrides from `env`.
    pub fn load(path: &Path, env: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml(&text, path)?;
        config.apply_env(env)?;
        config.validate()?;
        Ok(config)
    }

    pub fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(bind) = env(ENV_BIND) {
            self.bind = bind;
        }
        if let Some(port) = env(ENV_PORT) {
            self.port = port.trim().parse().map_err(|_| ConfigError::Env {
                name: ENV_PORT,
                message: format!("`{port}` is not a port number (0-65535)"),
            })?;
        }
        if let Some(dir) = env(ENV_DATA_DIR) {
            self.data_dir = dir.into();
        }
        if let Some(dir) = env(ENV_SCRIPT_DIR) {
            self.script_dir = dir.into();
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.script_dir.is_dir() {
            return Err(ConfigError::Invalid(format!(
                "script_dir {} is not a directory",
                self.script_dir.display()
            )));
        }
        let t = &self.timing;
        for (name, value) in [
            ("timing.heartbeat_s", t.heartbeat_s),
            ("timing.idle_expiry_s", t.idle_expiry_s),
            ("timing.clock_rate", t.clock_rate),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be positive, got {value}")));
            }
        }
        if t.tick_ms == 0 {
            return Err(ConfigError::Invalid("timing.tick_ms must be positive".into()));
        }
        Ok(())
    }

    pub fn sessions_dir(&self) -> PathBuf {
        self.data_dir.join("sessions")
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.data_dir.join("runs")
    }
}
