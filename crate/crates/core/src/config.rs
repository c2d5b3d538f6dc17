//! Run configuration, read from JSON. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotator::Stages;
use crate::corpus::{HttpSearchConfig, SplitRatios};
use crate::llm::{HttpBackendConfig, PromptBuilder, TrainingManifest};
use crate::metrics::{IdentifierScorer, OneHotEmbedder, TokenEmbedder, TrigramEmbedder, TrigramIdentifierScorer};
use crate::retry::RetryPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Stub,
    Http,
    Replay,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stub" => Ok(Self::Stub),
            "http" => Ok(Self::Http),
            "replay" => Ok(Self::Replay),
            _ => Err(format!("unknown backend {s:?} (expected stub, http or replay)")),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Stub => "stub",
            Self::Http => "http",
            Self::Replay => "replay",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedderKind {
    #[default]
    Trigram,
    OneHot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    /// Vector size; the vocabulary capacity for one-hot.
    pub dimension: usize,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self { kind: EmbedderKind::Trigram, dimension: 512 }
    }
}

impl EmbedderConfig {
    pub fn build(&self) -> Box<dyn TokenEmbedder> {
        match self.kind {
            EmbedderKind::Trigram => Box::new(TrigramEmbedder { dimension: self.dimension.max(1) }),
            EmbedderKind::OneHot => Box::new(OneHotEmbedder::new(self.dimension.max(1))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    #[default]
    SubtokenTrigram,
}

impl ScorerKind {
    pub fn build(self) -> Box<dyn IdentifierScorer> {
        match self {
            ScorerKind::SubtokenTrigram => Box::new(TrigramIdentifierScorer),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocumentSource {
    /// Walk a local directory for files with the prescribed name.
    #[default]
    Local,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct FetchConfig {
    pub source: DocumentSource,
    /// Defaults to `<corpus>/documents`.
    pub documents_dir: Option<PathBuf>,
    pub search: HttpSearchConfig,
    pub retry: RetryPolicy,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            source: DocumentSource::Local,
            documents_dir: None,
            search: HttpSearchConfig::default(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct Config {
    pub backend: BackendKind,
    pub http: HttpBackendConfig,
    /// JSON Lines files of recorded outputs for the replay backend.
    pub replay_files: Vec<PathBuf>,
    pub prompts: PromptBuilder,
    pub embedder: EmbedderConfig,
    pub scorer: ScorerKind,
    pub bleu_max_n: usize,
    pub split: SplitRatios,
    pub seed: u64,
    /// Occurrences a key set needs before it becomes a definition.
    pub min_count: usize,
    pub stages: Stages,
    pub manifest: TrainingManifest,
    pub fetch: FetchConfig,
    /// Worker threads; all cores when absent.
    pub jobs: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            backend: BackendKind::Stub,
            http: HttpBackendConfig::default(),
            replay_files: Vec::new(),
            prompts: PromptBuilder::default(),
            embedder: EmbedderConfig::default(),
            scorer: ScorerKind::SubtokenTrigram,
            bleu_max_n: 4,
            split: SplitRatios::default(),
            seed: 0,
            min_count: 2,
            stages: Stages::default(),
            manifest: TrainingManifest::default(),
            fetch: FetchConfig::default(),
            jobs: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
        let config =
            Self::from_json(&text).map_err(|e| ConfigError::Invalid { path: shown.clone(), message: e.to_string() })?;
        config.split.check().map_err(|e| ConfigError::Invalid { path: shown, message: e.to_string() })?;
        Ok(config)
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = Config::default();
        let back = Config::from_json(&c.to_pretty_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.manifest.lora_rank, 32);
    }

    #[test]
    fn partial_and_unknown_keys() {
        let c = Config::from_json(r#"{"seed":7,"backend":"replay","http":{"model":"m"},"manifest":{"batchSize":4}}"#)
            .unwrap();
        assert_eq!((c.seed, c.backend, c.http.model.as_str(), c.manifest.batch_size), (7, BackendKind::Replay, "m", 4));
        assert_eq!(c.http.max_concurrency, 4);
        assert!(Config::from_json(r#"{"sede":7}"#).is_err());
        assert!(Config::from_json(r#"{"http":{"modle":"m"}}"#).is_err());
        assert!(Config::from_json(r#"{"prompts":{"templates":{"selection":"Include? yes/no"}}}"#).is_ok());
    }

    #[test]
    fn bad_split_rejected_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"split":{"train":0.5,"validation":0.1,"test":0.1}}"#).unwrap();
        assert!(matches!(Config::load(&path), Err(ConfigError::Invalid { .. })));
    }
}
