//! Pipeline configuration: a TOML document with `${VAR}` interpolation.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use talkpoints_core::evaluation::{Method, DEFAULT_NEGATIVES, DEFAULT_TOP_K};
use talkpoints_core::perspectives::{DEFAULT_K, DEFAULT_M};
use talkpoints_core::ptp::DEFAULT_MEMBERSHIP_THRESHOLD;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config references unset environment variable {0}")]
    MissingVar(String),
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("invalid config field {field}: {message}")]
    Invalid { field: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    #[default]
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusPaths {
    pub articles: PathBuf,
    pub bias_map: PathBuf,
    pub candidates: Option<PathBuf>,
}

impl Default for CorpusPaths {
    fn default() -> Self {
        Self {
            articles: "articles.jsonl".into(),
            bias_map: "bias_map.csv".into(),
            candidates: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Endpoint {
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: u64,
}

impl Default for Endpoint {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            timeout_secs: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub chat: Endpoint,
    pub embedding: Endpoint,
    /// Never serialized into artifacts.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub requests_per_minute: Option<u32>,
    pub max_in_flight: usize,
    pub max_attempts: u32,
    pub mock_embedding_dim: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            chat: Endpoint::default(),
            embedding: Endpoint::default(),
            api_key: None,
            requests_per_minute: None,
            max_in_flight: 8,
            max_attempts: 5,
            mock_embedding_dim: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub membership: f64,
    pub unseen: f64,
    pub unseen_window_days: i64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            membership: DEFAULT_MEMBERSHIP_THRESHOLD,
            unseen: 0.86,
            unseen_window_days: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerspectiveSettings {
    pub k: usize,
    pub m: usize,
}

impl Default for PerspectiveSettings {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            m: DEFAULT_M,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    pub top_k: usize,
    pub negatives: usize,
    pub methods: Vec<Method>,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self {
            top_k: DEFAULT_TOP_K,
            negatives: DEFAULT_NEGATIVES,
            methods: Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnapshotSettings {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub radius_c: f64,
}

impl Default for SnapshotSettings {
    fn default() -> Self {
        Self {
            width: 800.0,
            height: 600.0,
            margin: 60.0,
            radius_c: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Defaults to `<output_dir>/cache`.
    pub cache_dir: Option<PathBuf>,
    pub corpus: CorpusPaths,
    pub backend: BackendConfig,
    pub thresholds: Thresholds,
    pub perspectives: PerspectiveSettings,
    pub evaluation: EvaluationSettings,
    pub snapshot: SnapshotSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            output_dir: "out".into(),
            cache_dir: None,
            corpus: CorpusPaths::default(),
            backend: BackendConfig::default(),
            thresholds: Thresholds::default(),
            perspectives: PerspectiveSettings::default(),
            evaluation: EvaluationSettings::default(),
            snapshot: SnapshotSettings::default(),
        }
    }
}

/// Replaces `${NAME}` with the variable's value and `${NAME:-fallback}` with
/// the fallback when unset.
pub fn interpolate(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String, ConfigError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find('}')
            .ok_or_else(|| ConfigError::Syntax("unterminated ${ in config".into()))?;
        let expr = &after[..end];
        let (name, fallback) = match expr.split_once(":-") {
            Some((n, f)) => (n, Some(f)),
            None => (expr, None),
        };
        match (lookup(name), fallback) {
            (Some(v), _) => out.push_str(&v),
            (None, Some(f)) => out.push_str(f),
            (None, None) => return Err(ConfigError::MissingVar(name.to_string())),
        }
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl PipelineConfig {
    /// Parses a config document; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let text = interpolate(text, |k| env::var(k).ok())?;
        let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.corpus.articles);
        fix(&mut self.corpus.bias_map);
        if let Some(c) = &mut self.corpus.candidates {
            fix(c);
        }
        if let Some(c) = &mut self.cache_dir {
            fix(c);
        }
    }

    pub fn cache_path(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join("cache"))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, message: &str| ConfigError::Invalid {
            field: field.to_string(),
            message: message.to_string(),
        };
        for (field, v) in [
            ("thresholds.membership", self.thresholds.membership),
            ("thresholds.unseen", self.thresholds.unseen),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(field, "must lie in [0, 1]"));
            }
        }
        for (field, v) in [
            ("perspectives.k", self.perspectives.k),
            ("perspectives.m", self.perspectives.m),
            ("evaluation.top_k", self.evaluation.top_k),
            ("evaluation.negatives", self.evaluation.negatives),
            ("backend.max_in_flight", self.backend.max_in_flight),
            ("backend.mock_embedding_dim", self.backend.mock_embedding_dim),
        ] {
            if v == 0 {
                return Err(bad(field, "must be positive"));
            }
        }
        if self.thresholds.unseen_window_days < 0 {
            return Err(bad("thresholds.unseen_window_days", "must not be negative"));
        }
        if self.snapshot.radius_c <= 0.0 || self.snapshot.width <= 2.0 * self.snapshot.margin {
            return Err(bad("snapshot", "radius_c must be positive and width must exceed twice the margin"));
        }
        if self.snapshot.height <= 2.0 * self.snapshot.margin {
            return Err(bad("snapshot.height", "must exceed twice the margin"));
        }
        if self.backend.kind == BackendKind::Live {
            if self.backend.chat.endpoint.is_empty() {
                return Err(bad("backend.chat.endpoint", "required for the live backend"));
            }
            if self.backend.embedding.endpoint.is_empty() {
                return Err(bad("backend.embedding.endpoint", "required for the live backend"));
            }
        }
        Ok(())
    }
}
