//! Prompt construction, pluggable generation backends, and fine-tuning
//! dataset export.

mod backend;
mod export;
mod http;
mod prompt;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{classify, generate, parse_verdict, Capability, GenerationBackend, ReplayBackend, StubBackend};
pub use export::{
    dataset_file, export_training, read_training, ExportSummary, TrainingManifest, TrainingRecord, MANIFEST_FILE,
};
pub use http::{HttpBackend, HttpBackendConfig};
pub use prompt::{
    PromptBuilder, PromptLimits, PromptRequest, PromptTemplates, DEFINITION_INSTRUCTION, DESCRIPTION_INSTRUCTION,
    SELECTION_INSTRUCTION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Description,
    Definition,
    Selection,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Description, Task::Definition, Task::Selection];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Description => "description",
            Task::Definition => "definition",
            Task::Selection => "selection",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| format!("unknown task {s:?}"))
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("prompt input is empty")]
    EmptyInput,
    #[error("prompt input has {len} characters, limit is {limit}")]
    InputTooLong { len: usize, limit: usize },
    #[error("backend {backend} does not support {capability}")]
    Unsupported { backend: String, capability: &'static str },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    Malformed(String),
    #[error("unparseable verdict {0:?}")]
    Abstention(String),
    #[error("no recorded output for {task} input {input:?}")]
    ReplayMiss { task: Task, input: String },
    #[error("nothing to export")]
    NoExamples,
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Record { path: String, line: usize, message: String },
}

impl LlmError {
    /// Abstentions are per-request model noise, everything else is a
    /// backend failure.
    pub fn is_abstention(&self) -> bool {
        matches!(self, LlmError::Abstention(_))
    }
}
