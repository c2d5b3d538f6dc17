use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LlmError, PromptBuilder, PromptRequest, Task};
use crate::corpus::TrainingExample;

/// LoRA fine-tuning hyperparameters written next to the datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct TrainingManifest {
    pub batch_size: u32,
    pub learning_rate_max: f64,
    pub learning_rate_min: f64,
    pub schedule: String,
    pub optimizer: String,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub lora_dropout: f64,
    pub lora_rank: u32,
    pub lora_alpha: u32,
    pub epochs: u32,
}

impl Default for TrainingManifest {
    fn default() -> Self {
        Self {
            batch_size: 8,
            learning_rate_max: 2e-4,
            learning_rate_min: 8e-6,
            schedule: "cosine".into(),
            optimizer: "AdamW".into(),
            beta1: 0.9,
            beta2: 0.95,
            weight_decay: 0.016,
            lora_dropout: 0.008,
            lora_rank: 32,
            lora_alpha: 16,
            epochs: 1,
        }
    }
}

/// One line of an exported dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub task: Task,
    pub instruction: String,
    pub input: String,
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<TrainingExample>,
}

impl TrainingRecord {
    pub fn from_example(builder: &PromptBuilder, example: &TrainingExample) -> Result<Self, LlmError> {
        let (request, output): (PromptRequest, String) = match example {
            TrainingExample::Description(e) => (builder.description(&e.fragment)?, e.description.clone()),
            TrainingExample::Definition(e) => (builder.definition(&e.definition_schema), e.name.clone()),
            TrainingExample::Selection(e) => (builder.selection(e), if e.label { "yes" } else { "no" }.to_string()),
        };
        Ok(Self {
            task: request.task,
            instruction: request.instruction,
            input: request.input,
            output,
            example: Some(example.clone()),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExportSummary {
    pub description: usize,
    pub definition: usize,
    pub selection: usize,
}

pub fn dataset_file(task: Task) -> String {
    format!("{task}.jsonl")
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> LlmError + '_ {
    move |source| LlmError::Io { path: path.display().to_string(), source }
}

/// Writes `<task>.jsonl` for each task plus `manifest.json`. Records keep
/// the input order, so output bytes depend only on the input.
pub fn export_training(
    examples: &[TrainingExample],
    manifest: &TrainingManifest,
    builder: &PromptBuilder,
    destination: &Path,
) -> Result<ExportSummary, LlmError> {
    if examples.is_empty() {
        return Err(LlmError::NoExamples);
    }
    std::fs::create_dir_all(destination).map_err(io_error(destination))?;
    let mut summary = ExportSummary::default();
    for task in Task::ALL {
        let path = destination.join(dataset_file(task));
        let mut out = Vec::new();
        for example in examples.iter().filter(|e| e.task() == task.as_str()) {
            let record = TrainingRecord::from_example(builder, example)?;
            serde_json::to_writer(&mut out, &record).expect("records serialize");
            out.push(b'\n');
        }
        let count = out.iter().filter(|b| **b == b'\n').count();
        match task {
            Task::Description => summary.description = count,
            Task::Definition => summary.definition = count,
            Task::Selection => summary.selection = count,
        }
        std::fs::write(&path, out).map_err(io_error(&path))?;
    }
    let path = destination.join(MANIFEST_FILE);
    let mut file = std::fs::File::create(&path).map_err(io_error(&path))?;
    serde_json::to_writer_pretty(&mut file, manifest).expect("manifest serializes");
    file.write_all(b"\n").map_err(io_error(&path))?;
    Ok(summary)
}

/// Reads the examples back from an export directory, grouped by task.
pub fn read_training(destination: &Path) -> Result<Vec<TrainingExample>, LlmError> {
    let mut examples = Vec::new();
    for task in Task::ALL {
        let path = destination.join(dataset_file(task));
        if !path.exists() {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(io_error(&path))?;
        for (i, line) in text.lines().enumerate() {
            let record: TrainingRecord = serde_json::from_str(line).map_err(|e| LlmError::Record {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            examples.extend(record.example);
        }
    }
    Ok(examples)
}
