//! Flat `section.key = value` configuration with environment overrides.
//!
//! Lookup order is environment (`SEGFORGE_<SECTION>_<KEY>`), then the file,
//! then the built-in default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use segforge_core::retrieval::{ChunkConfig, RankParams};
use segforge_core::MeasureKind;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `section.key = value`")]
    Syntax { line: usize },
    #[error("{key}: cannot parse {value:?}")]
    Value { key: String, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Scripted,
    Live,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Scripted => "scripted",
            BackendKind::Live => "live",
        }
    }
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scripted" => Ok(BackendKind::Scripted),
            "live" => Ok(BackendKind::Live),
            other => Err(format!("unknown backend {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EdgarConfig {
    pub rate_limit_rps: f64,
    pub user_agent: String,
    pub cache_dir: PathBuf,
    pub max_retries: u32,
    /// Root of a local EDGAR mirror used when the network is off.
    pub fixture_dir: PathBuf,
    pub base_url: String,
    pub backoff_ms: u64,
}

#[derive(Debug, Clone)]
pub struct LlmConfig {
    pub backend: BackendKind,
    pub model: String,
    pub api_base: String,
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub script_path: Vec<PathBuf>,
    pub timeout_secs: u64,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub measures: Vec<MeasureKind>,
    pub nested_measures: Vec<MeasureKind>,
}

#[derive(Debug, Clone)]
pub struct RetrievalConfig {
    pub chunking: ChunkConfig,
    pub rank: RankParams,
    pub top_k: usize,
    pub budget_chars: usize,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub edgar: EdgarConfig,
    pub llm: LlmConfig,
    pub pipeline: PipelineConfig,
    pub retrieval: RetrievalConfig,
    pub run_dir: PathBuf,
    pub store_path: PathBuf,
}

/// Raw key-value pairs as read from a file.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
    base: PathBuf,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let k = k.trim();
            if !k.contains('.') || k.starts_with('.') || k.ends_with('.') {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            values.insert(k.to_ascii_lowercase(), v.trim().to_string());
        }
        Ok(RawConfig { values, base: PathBuf::new() })
    }

    pub fn load(path: &Path) -> Result<RawConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut raw = RawConfig::parse(&text)?;
        raw.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(raw)
    }

    pub fn env_name(key: &str) -> String {
        format!("SEGFORGE_{}", key.replace('.', "_").to_ascii_uppercase())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        std::env::var(Self::env_name(key)).ok().or_else(|| self.values.get(key).cloned())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
    }

    fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::Value { key: key.into(), value: v }),
        }
    }

    /// Relative paths in a config file resolve against the file's directory.
    fn path(&self, key: &str, default: &str) -> PathBuf {
        let p = PathBuf::from(self.get(key).unwrap_or_else(|| default.to_string()));
        if p.is_relative() && self.values.contains_key(key) {
            self.base.join(p)
        } else {
            p
        }
    }

    fn measures(&self, key: &str, default: &str) -> Result<Vec<MeasureKind>, ConfigError> {
        let v = self.get(key).unwrap_or_else(|| default.to_string());
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| MeasureKind::parse(s).map_err(|_| ConfigError::Value { key: key.into(), value: v.clone() }))
            .collect()
    }

    pub fn resolve(&self) -> Result<Config, ConfigError> {
        let chunking = ChunkConfig {
            min_len: self.parsed("retrieval.chunk_min", 800)?,
            max_len: self.parsed("retrieval.chunk_max", 1600)?,
        };
        let rank = RankParams {
            k1: self.parsed("retrieval.k1", 1.2)?,
            b: self.parsed("retrieval.b", 0.75)?,
            segment_boost: self.parsed("retrieval.segment_boost", 1.5)?,
        };
        let scripts = self.get("llm.script_path").unwrap_or_else(|| "fixtures/scripts".to_string());
        let script_path = scripts
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                let p = PathBuf::from(s);
                if p.is_relative() && self.values.contains_key("llm.script_path") { self.base.join(p) } else { p }
            })
            .collect();
        let backend = self.get("llm.backend").unwrap_or_else(|| "scripted".into());
        Ok(Config {
            edgar: EdgarConfig {
                rate_limit_rps: self.parsed("edgar.rate_limit_rps", 8.0)?,
                user_agent: self
                    .get("edgar.user_agent")
                    .unwrap_or_else(|| "segforge research contact@example.org".into()),
                cache_dir: self.path("edgar.cache_dir", "cache"),
                max_retries: self.parsed("edgar.max_retries", 3)?,
                fixture_dir: self.path("edgar.fixture_dir", "fixtures/edgar"),
                base_url: self.get("edgar.base_url").unwrap_or_else(|| "https://www.sec.gov".into()),
                backoff_ms: self.parsed("edgar.backoff_ms", 500)?,
            },
            llm: LlmConfig {
                backend: backend
                    .parse()
                    .map_err(|_| ConfigError::Value { key: "llm.backend".into(), value: backend.clone() })?,
                model: self.get("llm.model").unwrap_or_else(|| "gpt-4.1".into()),
                api_base: self.get("llm.api_base").unwrap_or_else(|| "https://api.openai.com/v1".into()),
                api_key_env: self.get("llm.api_key_env").unwrap_or_else(|| "OPENAI_API_KEY".into()),
                max_in_flight: self.parsed("llm.max_in_flight", 5)?,
                script_path,
                timeout_secs: self.parsed("llm.timeout_secs", 120)?,
            },
            pipeline: PipelineConfig {
                measures: self.measures("pipeline.measures", "revenue, profit_or_loss, assets")?,
                nested_measures: self.measures("pipeline.nested_measures", "revenue")?,
            },
            retrieval: RetrievalConfig {
                chunking,
                rank,
                top_k: self.parsed("retrieval.top_k", 4)?,
                budget_chars: self.parsed("retrieval.budget_chars", 40_000)?,
            },
            run_dir: self.path("run.dir", "run"),
            store_path: self.path("store.panel", "run/panel.jsonl"),
        })
    }
}

impl Default for Config {
    fn default() -> Self {
        RawConfig::default().resolve().expect("defaults parse")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_defaults() {
        let raw = RawConfig::parse("# comment\nedgar.rate_limit_rps = 2\nllm.max_in_flight=3\npipeline.measures = revenue, other:Backlog\n").unwrap();
        let c = raw.resolve().unwrap();
        assert_eq!(c.edgar.rate_limit_rps, 2.0);
        assert_eq!(c.llm.max_in_flight, 3);
        assert_eq!(c.edgar.max_retries, 3);
        assert_eq!(c.pipeline.measures.len(), 2);
        assert_eq!(c.retrieval.rank.k1, 1.2);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(RawConfig::parse("nonsense"), Err(ConfigError::Syntax { line: 1 })));
        let raw = RawConfig::parse("llm.backend = psychic").unwrap();
        assert!(raw.resolve().is_err());
    }

    #[test]
    fn env_names() {
        assert_eq!(RawConfig::env_name("edgar.user_agent"), "SEGFORGE_EDGAR_USER_AGENT");
    }
}
