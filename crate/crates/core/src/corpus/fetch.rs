//! Acquisition of documents that share a schema's prescribed filename and
//! validate against it.

use std::path::PathBuf;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::CorpusError;
use crate::json::parse_json;
use crate::retry::RetryPolicy;
use crate::schema::{validate, SchemaNode};

/// Raw text of one document found under a matching filename.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub source: String,
    pub text: String,
}

#[derive(Debug, Error)]
pub enum FetchError {
    /// Worth retrying: network failures, rate limits, server errors.
    #[error("transport: {0}")]
    Transport(String),
    #[error("{0}")]
    Fatal(String),
}

impl FetchError {
    pub fn is_transient(&self) -> bool {
        matches!(self, FetchError::Transport(_))
    }
}

/// Source of candidate documents by filename. Implementations must be
/// safe to call from several threads.
pub trait DocumentFetcher: Send + Sync {
    fn fetch(&self, filename: &str) -> Result<Vec<Candidate>, FetchError>;
}

/// Walks a directory tree for files whose name matches a glob pattern
/// (the prescribed filename is a valid pattern as is).
#[derive(Debug, Clone)]
pub struct LocalDirFetcher {
    pub root: PathBuf,
}

impl LocalDirFetcher {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl DocumentFetcher for LocalDirFetcher {
    fn fetch(&self, filename: &str) -> Result<Vec<Candidate>, FetchError> {
        let pattern =
            glob::Pattern::new(filename).map_err(|e| FetchError::Fatal(format!("bad pattern {filename}: {e}")))?;
        if !self.root.exists() {
            return Ok(Vec::new());
        }
        let mut found = Vec::new();
        for entry in walkdir::WalkDir::new(&self.root).sort_by_file_name() {
            let entry = entry.map_err(|e| FetchError::Fatal(e.to_string()))?;
            if !entry.file_type().is_file() || !pattern.matches(&entry.file_name().to_string_lossy()) {
                continue;
            }
            let path = entry.path();
            match std::fs::read(path) {
                Ok(bytes) => found.push(Candidate {
                    source: path.display().to_string(),
                    text: String::from_utf8_lossy(&bytes).into_owned(),
                }),
                Err(e) => log::warn!("{}: {e}", path.display()),
            }
        }
        Ok(found)
    }
}

/// Settings for a generic code-search HTTP API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct HttpSearchConfig {
    pub endpoint: String,
    /// Query string; `{filename}` is replaced by the prescribed filename.
    pub query_template: String,
    /// Environment variable holding a bearer token, if any.
    pub token_env: Option<String>,
    /// Pointer to the result array in the response body.
    pub items_pointer: String,
    pub timeout_secs: u64,
    pub max_results: usize,
}

impl Default for HttpSearchConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.github.com/search/code".into(),
            query_template: "filename:{filename}".into(),
            token_env: Some("CODE_SEARCH_TOKEN".into()),
            items_pointer: "/items".into(),
            timeout_secs: 30,
            max_results: 100,
        }
    }
}

/// Code-search client. Each result item either carries base64 `content`
/// inline or a `download_url` that is fetched separately.
pub struct HttpSearchFetcher {
    config: HttpSearchConfig,
    agent: ureq::Agent,
}

impl HttpSearchFetcher {
    pub fn new(config: HttpSearchConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .build()
            .new_agent();
        Self { config, agent }
    }

    fn token(&self) -> Option<String> {
        self.config.token_env.as_deref().and_then(|var| std::env::var(var).ok())
    }

    fn get(&self, url: &str, query: Option<&str>) -> Result<String, FetchError> {
        let mut request = self.agent.get(url).header("Accept", "application/json");
        if let Some(q) = query {
            request = request.query("q", q).query("per_page", self.config.max_results.to_string());
        }
        if let Some(token) = self.token() {
            request = request.header("Authorization", format!("Bearer {token}"));
        }
        let response = request.call().map_err(|e| FetchError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response.into_body().read_to_string().map_err(|e| FetchError::Transport(e.to_string()))?;
        match status {
            200..=299 => Ok(body),
            429 | 500..=599 => Err(FetchError::Transport(format!("{url}: HTTP {status}"))),
            _ => Err(FetchError::Fatal(format!("{url}: HTTP {status}"))),
        }
    }
}

impl DocumentFetcher for HttpSearchFetcher {
    fn fetch(&self, filename: &str) -> Result<Vec<Candidate>, FetchError> {
        let query = self.config.query_template.replace("{filename}", filename);
        let body = self.get(&self.config.endpoint, Some(&query))?;
        let response: Value =
            serde_json::from_str(&body).map_err(|e| FetchError::Fatal(format!("search response: {e}")))?;
        let items = response.pointer(&self.config.items_pointer).and_then(Value::as_array).ok_or_else(|| {
            FetchError::Fatal(format!("search response has no array at {}", self.config.items_pointer))
        })?;

        let mut found = Vec::new();
        for item in items.iter().take(self.config.max_results) {
            let source = ["html_url", "url", "path"]
                .iter()
                .find_map(|k| item.get(*k).and_then(Value::as_str))
                .unwrap_or("<unknown>")
                .to_string();
            if let Some(content) = item.get("content").and_then(Value::as_str) {
                let cleaned: String = content.chars().filter(|c| !c.is_whitespace()).collect();
                match base64::engine::general_purpose::STANDARD.decode(cleaned) {
                    Ok(bytes) => found.push(Candidate { source, text: String::from_utf8_lossy(&bytes).into_owned() }),
                    Err(e) => log::warn!("{source}: undecodable content: {e}"),
                }
            } else if let Some(url) = item.get("download_url").and_then(Value::as_str) {
                found.push(Candidate { source, text: self.get(url, None)? });
            } else {
                log::warn!("{source}: search result has neither content nor download_url");
            }
        }
        Ok(found)
    }
}

/// Counts from one acquisition run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FetchOutcome {
    pub documents: Vec<Value>,
    pub candidates: usize,
    pub unparseable: usize,
    pub nonconforming: usize,
}

/// Fetches candidates by filename and keeps only those that parse and
/// validate against `schema` with no violations.
pub fn fetch_conforming_documents(
    schema: &SchemaNode,
    prescribed_name: &str,
    fetcher: &dyn DocumentFetcher,
    retry: &RetryPolicy,
) -> Result<FetchOutcome, CorpusError> {
    if prescribed_name.trim().is_empty() {
        return Err(CorpusError::EmptyFilename);
    }
    let candidates = retry
        .run(|| fetcher.fetch(prescribed_name), FetchError::is_transient)
        .map_err(|(e, attempts)| CorpusError::Fetch { attempts, message: e.to_string() })?;

    let mut outcome = FetchOutcome { candidates: candidates.len(), ..Default::default() };
    for candidate in candidates {
        let document = match parse_json(&candidate.text) {
            Ok(v) => v,
            Err(e) => {
                log::warn!("{}: skipped, not JSON: {e}", candidate.source);
                outcome.unparseable += 1;
                continue;
            }
        };
        if validate(schema, &document)?.is_empty() {
            outcome.documents.push(document);
        } else {
            log::debug!("{}: does not validate, dropped", candidate.source);
            outcome.nonconforming += 1;
        }
    }
    log::info!(
        "{prescribed_name}: {} of {} candidates conform ({} unparseable, {} nonconforming)",
        outcome.documents.len(),
        outcome.candidates,
        outcome.unparseable,
        outcome.nonconforming
    );
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    struct Fixed(Vec<&'static str>);

    impl DocumentFetcher for Fixed {
        fn fetch(&self, _: &str) -> Result<Vec<Candidate>, FetchError> {
            Ok(self
                .0
                .iter()
                .enumerate()
                .map(|(i, t)| Candidate { source: format!("c{i}"), text: t.to_string() })
                .collect())
        }
    }

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
    }

    impl DocumentFetcher for Flaky {
        fn fetch(&self, _: &str) -> Result<Vec<Candidate>, FetchError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(FetchError::Transport("connection reset".into()))
            } else {
                Ok(vec![Candidate { source: "ok".into(), text: "{\"a\":1}".into() }])
            }
        }
    }

    fn schema() -> SchemaNode {
        SchemaNode::parse(r#"{"type":"object","properties":{"a":{"type":"integer"}},"required":["a"]}"#).unwrap()
    }

    #[test]
    fn keeps_only_conforming() {
        let fetcher = Fixed(vec![r#"{"a":1}"#, r#"{"a":"x"}"#, r#"{"a":2,"b":3}"#, "{}", r#"{"a":-4}"#]);
        let out = fetch_conforming_documents(&schema(), "x.json", &fetcher, &RetryPolicy::no_delay(1)).unwrap();
        assert_eq!(out.documents.len(), 3);
        assert_eq!(out.nonconforming, 2);
    }

    #[test]
    fn empty_and_syntax_errors() {
        let out = fetch_conforming_documents(&schema(), "x.json", &Fixed(vec![]), &RetryPolicy::no_delay(1)).unwrap();
        assert!(out.documents.is_empty());
        let out = fetch_conforming_documents(
            &schema(),
            "x.json",
            &Fixed(vec!["{\"a\":", r#"{"a":1}"#]),
            &RetryPolicy::no_delay(1),
        )
        .unwrap();
        assert_eq!((out.documents.len(), out.unparseable), (1, 1));
        assert!(matches!(
            fetch_conforming_documents(&schema(), " ", &Fixed(vec![]), &RetryPolicy::no_delay(1)),
            Err(CorpusError::EmptyFilename)
        ));
    }

    #[test]
    fn transport_failures_retried_then_surfaced() {
        let flaky = Flaky { failures: 2, calls: AtomicU32::new(0) };
        let out = fetch_conforming_documents(&schema(), "x.json", &flaky, &RetryPolicy::no_delay(3)).unwrap();
        assert_eq!(out.documents.len(), 1);
        let dead = Flaky { failures: 10, calls: AtomicU32::new(0) };
        let err = fetch_conforming_documents(&schema(), "x.json", &dead, &RetryPolicy::no_delay(3)).unwrap_err();
        assert!(matches!(err, CorpusError::Fetch { attempts: 3, .. }));
    }

    #[test]
    fn local_dir_matches_filename() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("repo1/sub")).unwrap();
        std::fs::write(dir.path().join("repo1/sub/app.json"), r#"{"a":1}"#).unwrap();
        std::fs::write(dir.path().join("repo1/other.json"), r#"{"a":2}"#).unwrap();
        std::fs::write(dir.path().join("app.json"), r#"{"a":3}"#).unwrap();
        let found = LocalDirFetcher::new(dir.path()).fetch("app.json").unwrap();
        assert_eq!(found.len(), 2);
        assert!(found.iter().all(|c| c.source.ends_with("app.json")));
        assert!(LocalDirFetcher::new(dir.path().join("missing")).fetch("app.json").unwrap().is_empty());
    }
}
