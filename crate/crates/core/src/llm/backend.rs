use std::collections::HashMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{LlmError, PromptRequest, Task, TrainingRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capability {
    Generate,
    Classify,
}

impl Capability {
    pub fn as_str(self) -> &'static str {
        match self {
            Capability::Generate => "generate",
            Capability::Classify => "classify",
        }
    }
}

/// Anything that turns a prompt into text. Must tolerate concurrent calls.
pub trait GenerationBackend: Send + Sync {
    /// Name recorded in reports.
    fn identity(&self) -> String;

    fn supports(&self, _capability: Capability) -> bool {
        true
    }

    /// Raw model output for one request.
    fn complete(&self, request: &PromptRequest) -> Result<String, LlmError>;
}

fn require(backend: &dyn GenerationBackend, capability: Capability) -> Result<(), LlmError> {
    if backend.supports(capability) {
        Ok(())
    } else {
        Err(LlmError::Unsupported { backend: backend.identity(), capability: capability.as_str() })
    }
}

/// Model output with surrounding whitespace removed.
pub fn generate(backend: &dyn GenerationBackend, request: &PromptRequest) -> Result<String, LlmError> {
    require(backend, Capability::Generate)?;
    Ok(backend.complete(request)?.trim().to_string())
}

/// Yes/no decision; unparseable output is an `Abstention` error.
pub fn classify(backend: &dyn GenerationBackend, request: &PromptRequest) -> Result<bool, LlmError> {
    require(backend, Capability::Classify)?;
    let output = backend.complete(request)?;
    parse_verdict(&output).ok_or(LlmError::Abstention(output))
}

/// Case-insensitive match of the first word.
pub fn parse_verdict(output: &str) -> Option<bool> {
    let first: String = output.trim_start().chars().take_while(|c| c.is_alphanumeric()).collect();
    match first.to_lowercase().as_str() {
        "yes" | "true" | "include" => Some(true),
        "no" | "false" | "exclude" => Some(false),
        _ => None,
    }
}

/// Offline backend whose output is a pure function of the request.
#[derive(Debug, Clone, Default)]
pub struct StubBackend;

impl StubBackend {
    fn digest(request: &PromptRequest) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(request.task.as_str());
        hasher.update([0]);
        hasher.update(&request.instruction);
        hasher.update([0]);
        hasher.update(&request.input);
        hasher.finalize().into()
    }
}

impl GenerationBackend for StubBackend {
    fn identity(&self) -> String {
        "stub".into()
    }

    fn complete(&self, request: &PromptRequest) -> Result<String, LlmError> {
        let digest = Self::digest(request);
        let tag = hex::encode(&digest[..4]);
        Ok(match request.task {
            Task::Description => format!("Generated description {tag}."),
            Task::Definition => format!("Stub{}", &tag[..6]),
            Task::Selection => if digest[4] & 1 == 0 { "yes" } else { "no" }.to_string(),
        })
    }
}

/// Serves outputs recorded earlier. Requests carrying an id matching a
/// record's example are answered by id first, then by task and input.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    outputs: HashMap<(Task, String), String>,
    by_id: HashMap<String, String>,
}

impl ReplayBackend {
    pub fn from_records(records: impl IntoIterator<Item = TrainingRecord>) -> Self {
        let mut outputs = HashMap::new();
        let mut by_id = HashMap::new();
        for r in records {
            if let Some(example) = &r.example {
                by_id.entry(example.request_id()).or_insert_with(|| r.output.clone());
            }
            outputs.entry((r.task, r.input)).or_insert(r.output);
        }
        Self { outputs, by_id }
    }

    /// Reads JSON Lines files of `{task, input, output, ...}` records.
    pub fn from_jsonl(paths: &[&Path]) -> Result<Self, LlmError> {
        let mut records = Vec::new();
        for path in paths {
            let shown = path.display().to_string();
            let text = std::fs::read_to_string(path).map_err(|source| LlmError::Io { path: shown.clone(), source })?;
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let record: TrainingRecord = serde_json::from_str(line).map_err(|e| LlmError::Record {
                    path: shown.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                records.push(record);
            }
        }
        Ok(Self::from_records(records))
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }
}

impl GenerationBackend for ReplayBackend {
    fn identity(&self) -> String {
        "replay".into()
    }

    fn complete(&self, request: &PromptRequest) -> Result<String, LlmError> {
        request
            .request_id
            .as_ref()
            .and_then(|id| self.by_id.get(id))
            .or_else(|| self.outputs.get(&(request.task, request.input.clone())))
            .cloned()
            .ok_or_else(|| LlmError::ReplayMiss { task: request.task, input: request.input.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::PromptBuilder;

    struct Fixed(&'static str);

    impl GenerationBackend for Fixed {
        fn identity(&self) -> String {
            "fixed".into()
        }

        fn supports(&self, capability: Capability) -> bool {
            capability == Capability::Classify
        }

        fn complete(&self, _: &PromptRequest) -> Result<String, LlmError> {
            Ok(self.0.to_string())
        }
    }

    #[test]
    fn verdict_table() {
        let table = [
            ("Yes", Some(true)),
            ("yes.", Some(true)),
            ("  TRUE", Some(true)),
            ("include it", Some(true)),
            ("no, skip it", Some(false)),
            ("False", Some(false)),
            ("Exclude", Some(false)),
            ("maybe", None),
            ("", None),
            ("yesterday", None),
            ("nope", None),
        ];
        for (text, expected) in table {
            assert_eq!(parse_verdict(text), expected, "{text:?}");
        }
    }

    #[test]
    fn classify_abstains_and_checks_capability() {
        let req = PromptBuilder::default().selection_snippet("{}");
        assert!(classify(&Fixed("Yes"), &req).unwrap());
        assert!(!classify(&Fixed("no, skip it"), &req).unwrap());
        assert!(matches!(classify(&Fixed("maybe"), &req), Err(LlmError::Abstention(o)) if o == "maybe"));
        assert!(matches!(generate(&Fixed("x"), &req), Err(LlmError::Unsupported { .. })));
    }

    #[test]
    fn stub_is_deterministic_and_task_shaped() {
        let b = PromptBuilder::default();
        let d = b.description(r#"{"type":"string"}"#).unwrap();
        let out = generate(&StubBackend, &d).unwrap();
        assert_eq!(out, generate(&StubBackend, &d).unwrap());
        assert!(out.starts_with("Generated description"));
        let other = generate(&StubBackend, &b.description(r#"{"type":"number"}"#).unwrap()).unwrap();
        assert_ne!(out, other);
        let s = b.selection_snippet(r#"{"properties":{"uri":{"format":"uri"}}}"#);
        assert!(parse_verdict(&StubBackend.complete(&s).unwrap()).is_some());
    }

    #[test]
    fn replay_lookup() {
        let record = TrainingRecord {
            task: Task::Definition,
            instruction: String::new(),
            input: r#"{"type":"string"}"#.into(),
            output: "SpdxLicenseId".into(),
            example: None,
        };
        let replay = ReplayBackend::from_records([record]);
        let b = PromptBuilder::default();
        let req = b.definition(&crate::schema::SchemaNode::parse(r#"{"type":"string"}"#).unwrap());
        assert_eq!(generate(&replay, &req).unwrap(), "SpdxLicenseId");
        let miss = b.definition(&crate::schema::SchemaNode::parse(r#"{"type":"number"}"#).unwrap());
        assert!(matches!(generate(&replay, &miss), Err(LlmError::ReplayMiss { .. })));
    }
}
