use serde::{Deserialize, Serialize};

use super::{LlmError, Task};
use crate::corpus::{PropertySelectionExample, FRAGMENT_CHARS};
use crate::schema::SchemaNode;

pub const DESCRIPTION_INSTRUCTION: &str = "Generate a short description for the given JSON Schema";
pub const DEFINITION_INSTRUCTION: &str =
    "Generate a name for the given JSON Schema definition consisting of a single programming language identifier";
pub const SELECTION_INSTRUCTION: &str =
    "Decide whether the given JSON Schema keyword should be included at this location. Answer yes or no.";

/// Instruction text per task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct PromptTemplates {
    pub description: String,
    pub definition: String,
    pub selection: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            description: DESCRIPTION_INSTRUCTION.into(),
            definition: DEFINITION_INSTRUCTION.into(),
            selection: SELECTION_INSTRUCTION.into(),
        }
    }
}

impl PromptTemplates {
    pub fn get(&self, task: Task) -> &str {
        match task {
            Task::Description => &self.description,
            Task::Definition => &self.definition,
            Task::Selection => &self.selection,
        }
    }
}

/// Input size limits in characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct PromptLimits {
    pub description_input_chars: usize,
    pub definition_input_chars: usize,
    pub selection_input_chars: usize,
    pub description_max_tokens: u32,
    pub definition_max_tokens: u32,
    pub selection_max_tokens: u32,
}

impl Default for PromptLimits {
    fn default() -> Self {
        Self {
            description_input_chars: FRAGMENT_CHARS,
            definition_input_chars: FRAGMENT_CHARS,
            selection_input_chars: 256,
            description_max_tokens: 64,
            definition_max_tokens: 16,
            selection_max_tokens: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PromptRequest {
    pub task: Task,
    pub instruction: String,
    pub input: String,
    pub max_output_tokens: u32,
    pub temperature: f64,
    /// Set when the input was cut to fit the limit.
    #[serde(default)]
    pub truncated: bool,
    /// Identifies the example the request was built from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
}

impl PromptRequest {
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.request_id = Some(id.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct PromptBuilder {
    pub templates: PromptTemplates,
    pub limits: PromptLimits,
    pub temperature: f64,
}

impl Default for PromptBuilder {
    fn default() -> Self {
        Self { templates: PromptTemplates::default(), limits: PromptLimits::default(), temperature: 0.0 }
    }
}

fn truncate(text: &str, limit: usize) -> (String, bool) {
    match text.char_indices().nth(limit) {
        Some((cut, _)) => (text[..cut].to_string(), true),
        None => (text.to_string(), false),
    }
}

impl PromptBuilder {
    fn request(&self, task: Task, input: String, truncated: bool, max_output_tokens: u32) -> PromptRequest {
        PromptRequest {
            task,
            instruction: self.templates.get(task).to_string(),
            input,
            max_output_tokens,
            temperature: self.temperature.max(0.0),
            truncated,
            request_id: None,
        }
    }

    /// Rejects empty or over-length fragments; fragments are expected to
    /// be cut already.
    pub fn description(&self, fragment: &str) -> Result<PromptRequest, LlmError> {
        let len = fragment.chars().count();
        if fragment.trim().is_empty() {
            return Err(LlmError::EmptyInput);
        }
        if len > self.limits.description_input_chars {
            return Err(LlmError::InputTooLong { len, limit: self.limits.description_input_chars });
        }
        Ok(self.request(Task::Description, fragment.to_string(), false, self.limits.description_max_tokens))
    }

    pub fn definition(&self, definition: &SchemaNode) -> PromptRequest {
        let (input, cut) = truncate(&definition.to_canonical(), self.limits.definition_input_chars);
        self.request(Task::Definition, input, cut, self.limits.definition_max_tokens)
    }

    pub fn selection(&self, example: &PropertySelectionExample) -> PromptRequest {
        self.selection_snippet(&example.context_snippet)
    }

    pub fn selection_snippet(&self, snippet: &str) -> PromptRequest {
        let (input, cut) = truncate(snippet, self.limits.selection_input_chars);
        self.request(Task::Selection, input, cut, self.limits.selection_max_tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instruction_texts_exact() {
        let b = PromptBuilder::default();
        let r = b.description(r#"{"type":"string"}"#).unwrap();
        assert_eq!(r.instruction, "Generate a short description for the given JSON Schema");
        assert_eq!(r.input, r#"{"type":"string"}"#);
        assert_eq!(r.temperature, 0.0);
        let r = b.definition(&SchemaNode::parse(r#"{"type": "string"}"#).unwrap());
        assert_eq!(
            r.instruction,
            "Generate a name for the given JSON Schema definition consisting of a single programming language identifier"
        );
        assert_eq!(r.input, r#"{"type":"string"}"#);
    }

    #[test]
    fn description_bounds() {
        let b = PromptBuilder::default();
        assert!(matches!(b.description(""), Err(LlmError::EmptyInput)));
        assert!(b.description(&"x".repeat(100)).is_ok());
        assert!(matches!(b.description(&"x".repeat(101)), Err(LlmError::InputTooLong { len: 101, limit: 100 })));
    }

    #[test]
    fn definition_prefix_and_determinism() {
        let licenses: Vec<String> = ["proprietary", "0BSD", "AAL", "ADSL", "AFL-1.1", "AFL-1.2", "AFL-2.0", "AGPL-3.0"]
            .iter()
            .map(|s| format!("\"{s}\""))
            .collect();
        let schema = SchemaNode::parse(&format!(r#"{{"type":"string","enum":[{}]}}"#, licenses.join(", "))).unwrap();
        let b = PromptBuilder::default();
        let r = b.definition(&schema);
        assert!(r.input.starts_with(r#"{"enum":["proprietary","0BSD""#));
        assert_eq!(b.definition(&schema), r);
    }

    #[test]
    fn selection_truncation_flagged() {
        let b = PromptBuilder::default();
        let short = r#"{"properties":{"uri":{"format":"uri"}}}"#;
        let r = b.selection_snippet(short);
        assert_eq!((r.input.as_str(), r.truncated), (short, false));
        let long = format!(r#"{{"properties":{{"p":{{"enum":["{}"]}}}}}}"#, "é".repeat(400));
        let r = b.selection_snippet(&long);
        assert!(r.truncated);
        assert_eq!(r.input.chars().count(), 256);
        assert!(long.starts_with(&r.input));
    }
}
