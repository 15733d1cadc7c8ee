//! Service configuration: a TOML file plus environment overrides for
//! endpoints and secrets.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sonify_core::acquisition::DefaultSeeds;
use sonify_core::engine::DEFAULT_DT;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerBackendKind {
    Mock,
    Openai,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceBackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub backend: ControllerBackendKind,
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: f64,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            backend: ControllerBackendKind::Mock,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4".into(),
            temperature: 0.2,
            timeout_secs: 30.0,
            api_key: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub backend: ServiceBackendKind,
    pub endpoint: String,
    /// Sound descriptions served by the in-process mock.
    pub corpus: Option<PathBuf>,
    pub timeout_secs: f64,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            backend: ServiceBackendKind::Mock,
            endpoint: "http://127.0.0.1:7301".into(),
            corpus: None,
            timeout_secs: 20.0,
            api_key: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub backend: ServiceBackendKind,
    pub endpoint: String,
    pub timeout_secs: f64,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            backend: ServiceBackendKind::Mock,
            endpoint: "http://127.0.0.1:7302".into(),
            timeout_secs: 60.0,
            api_key: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LibraryConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutorConfig {
    pub parallelism: usize,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        Self { parallelism: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorConfig {
    pub dt: f64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self { dt: DEFAULT_DT }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub controller: ControllerConfig,
    pub retrieval: RetrievalConfig,
    pub generation: GenerationConfig,
    pub library: LibraryConfig,
    pub defaults: DefaultSeeds,
    pub executor: ExecutorConfig,
    pub simulator: SimulatorConfig,
}

/// Environment variables read by [`Config::apply_env`].
pub const ENV_OVERRIDES: [&str; 6] = [
    "SONIFY_CONTROLLER_ENDPOINT",
    "SONIFY_CONTROLLER_API_KEY",
    "SONIFY_RETRIEVAL_ENDPOINT",
    "SONIFY_RETRIEVAL_API_KEY",
    "SONIFY_GENERATION_ENDPOINT",
    "SONIFY_GENERATION_API_KEY",
];

impl Config {
    /// Parses TOML; relative paths are resolved against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base_dir.join(&*path);
                }
            }
        };
        resolve(&mut cfg.retrieval.corpus);
        resolve(&mut cfg.library.dir);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and applies environment overrides.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))?;
        cfg.apply_env(|k| std::env::var(k).ok());
        Ok(cfg)
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(v) = lookup("SONIFY_CONTROLLER_ENDPOINT") {
            self.controller.endpoint = v;
        }
        if let Some(v) = lookup("SONIFY_CONTROLLER_API_KEY") {
            self.controller.api_key = Some(v);
        }
        if let Some(v) = lookup("SONIFY_RETRIEVAL_ENDPOINT") {
            self.retrieval.endpoint = v;
        }
        if let Some(v) = lookup("SONIFY_RETRIEVAL_API_KEY") {
            self.retrieval.api_key = Some(v);
        }
        if let Some(v) = lookup("SONIFY_GENERATION_ENDPOINT") {
            self.generation.endpoint = v;
        }
        if let Some(v) = lookup("SONIFY_GENERATION_API_KEY") {
            self.generation.api_key = Some(v);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("controller.timeout_secs", self.controller.timeout_secs)?;
        positive("retrieval.timeout_secs", self.retrieval.timeout_secs)?;
        positive("generation.timeout_secs", self.generation.timeout_secs)?;
        positive("simulator.dt", self.simulator.dt)?;
        if self.simulator.dt > 0.1 {
            return Err(ConfigError::Invalid("simulator.dt must be at most 0.1".into()));
        }
        if self.executor.parallelism == 0 {
            return Err(ConfigError::Invalid("executor.parallelism must be at least 1".into()));
        }
        if self.retrieval.backend == ServiceBackendKind::Mock && self.retrieval.corpus.is_none() {
            return Err(ConfigError::Invalid("retrieval.corpus is required for the mock backend".into()));
        }
        Ok(())
    }

    pub fn controller_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.controller.timeout_secs)
    }

    /// The parts of the config worth recording with a session: backend
    /// choices and seeds, never endpoints or keys.
    pub fn snapshot(&self) -> ConfigSnapshot {
        ConfigSnapshot {
            controller: self.controller.backend,
            model: self.controller.model.clone(),
            retrieval: self.retrieval.backend,
            generation: self.generation.backend,
            defaults: self.defaults.clone(),
            parallelism: self.executor.parallelism,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub controller: ControllerBackendKind,
    pub model: String,
    pub retrieval: ServiceBackendKind,
    pub generation: ServiceBackendKind,
    pub defaults: DefaultSeeds,
    pub parallelism: usize,
}
