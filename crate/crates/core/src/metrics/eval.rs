use rayon::prelude::*;
use serde::Serialize;

use super::{
    abstention_free_accuracy, bleu, embedding_f1, identifier_similarity, majority_label, rouge_l, selection_accuracy,
    IdentifierScorer, MetricError, Prf, TokenEmbedder,
};
use crate::annotator::sanitize_identifier;
use crate::corpus::{
    extract_definitions, extract_descriptions, CorpusSplit, PropertySelectionExample, TrainingExample,
};
use crate::llm::{classify, generate, GenerationBackend, LlmError, PromptBuilder};
use crate::schema::SchemaNode;

/// A held-out schema with the selection examples mined for it.
#[derive(Debug, Clone)]
pub struct TestSchema {
    pub id: String,
    pub schema: SchemaNode,
    pub selection: Vec<PropertySelectionExample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub bleu_max_n: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { bleu_max_n: 4 }
    }
}

/// Per-item scores. Text-metric columns are empty for other tasks.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricRow {
    pub schema_id: String,
    pub task: String,
    pub location: String,
    pub keyword: Option<String>,
    pub reference: String,
    pub candidate: Option<String>,
    pub embedding_precision: Option<f64>,
    pub embedding_recall: Option<f64>,
    pub embedding_f1: Option<f64>,
    pub rouge_l_precision: Option<f64>,
    pub rouge_l_recall: Option<f64>,
    pub rouge_l: Option<f64>,
    pub bleu: Option<f64>,
    pub identifier_similarity: Option<f64>,
    pub label: Option<bool>,
    /// `yes`, `no` or `abstain`.
    pub prediction: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskSummary {
    pub items: usize,
    /// Items whose backend call failed; excluded from the means.
    pub failures: usize,
    pub embedding_f1: Option<Prf>,
    pub rouge_l: Option<Prf>,
    pub bleu: Option<f64>,
    pub identifier_similarity: Option<f64>,
    /// Abstentions count as wrong.
    pub accuracy: Option<f64>,
    /// Abstentions replaced by the majority label.
    pub abstention_free_accuracy: Option<f64>,
    pub majority_rate: Option<f64>,
    pub abstentions: usize,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricReport {
    pub backend: String,
    pub embedder: String,
    pub scorer: String,
    pub schemas: usize,
    pub description: TaskSummary,
    pub definition: TaskSummary,
    pub selection: TaskSummary,
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(writer);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// One line per task with the headline numbers.
    pub fn headline(&self) -> String {
        let f = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        format!(
            "description  n={} embeddingF1={} rougeL={} bleu={}\ndefinition   n={} identifierSim={}\nselection    n={} accuracy={} abstentions={}\n",
            self.description.items,
            f(self.description.embedding_f1.map(|p| p.f1)),
            f(self.description.rouge_l.map(|p| p.f1)),
            f(self.description.bleu),
            self.definition.items,
            f(self.definition.identifier_similarity),
            self.selection.items,
            f(self.selection.accuracy),
            self.selection.abstentions,
        )
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn mean_of(rows: &[&MetricRow], field: impl Fn(&MetricRow) -> Option<f64>) -> Option<f64> {
    mean(rows.iter().filter_map(|r| field(r)))
}

fn mean_prf(
    rows: &[&MetricRow],
    p: fn(&MetricRow) -> Option<f64>,
    r: fn(&MetricRow) -> Option<f64>,
    f: fn(&MetricRow) -> Option<f64>,
) -> Option<Prf> {
    Some(Prf { precision: mean_of(rows, p)?, recall: mean_of(rows, r)?, f1: mean_of(rows, f)? })
}

struct Scorers<'a> {
    backend: &'a dyn GenerationBackend,
    embedder: &'a dyn TokenEmbedder,
    scorer: &'a dyn IdentifierScorer,
    builder: &'a PromptBuilder,
    options: EvalOptions,
}

impl Scorers<'_> {
    fn score(&self, item: &TrainingExample) -> MetricRow {
        let id = item.request_id();
        let mut row =
            MetricRow { schema_id: item.schema_id().to_string(), task: item.task().into(), ..Default::default() };
        match item {
            TrainingExample::Description(e) => {
                row.location = e.location.to_string();
                row.reference = e.description.clone();
                let output = self.builder.description(&e.fragment).and_then(|r| generate(self.backend, &r.with_id(id)));
                match output {
                    Ok(text) => {
                        let emb = embedding_f1(&text, &e.description, self.embedder);
                        row.embedding_precision = Some(emb.precision);
                        row.embedding_recall = Some(emb.recall);
                        row.embedding_f1 = Some(emb.f1);
                        let rouge = rouge_l(&text, &e.description);
                        row.rouge_l_precision = Some(rouge.precision);
                        row.rouge_l_recall = Some(rouge.recall);
                        row.rouge_l = Some(rouge.f1);
                        row.bleu = Some(bleu(&text, &e.description, self.options.bleu_max_n));
                        row.candidate = Some(text);
                    }
                    Err(err) => row.error = Some(err.to_string()),
                }
            }
            TrainingExample::Definition(e) => {
                row.location = format!("/definitions/{}", e.name);
                row.reference = e.name.clone();
                match generate(self.backend, &self.builder.definition(&e.definition_schema).with_id(id)) {
                    Ok(text) => {
                        let name = sanitize_identifier(&text);
                        let sim = identifier_similarity(&name, &e.name, self.scorer).unwrap_or(0.0);
                        row.identifier_similarity = Some(sim);
                        row.candidate = Some(name);
                    }
                    Err(err) => row.error = Some(err.to_string()),
                }
            }
            TrainingExample::Selection(e) => {
                row.location = e.location.to_string();
                row.keyword = Some(e.keyword.clone());
                row.reference = e.context_snippet.clone();
                row.label = Some(e.label);
                match classify(self.backend, &self.builder.selection(e).with_id(id)) {
                    Ok(v) => row.prediction = Some(if v { "yes" } else { "no" }.into()),
                    Err(LlmError::Abstention(text)) => {
                        row.prediction = Some("abstain".into());
                        row.candidate = Some(text);
                    }
                    Err(err) => row.error = Some(err.to_string()),
                }
            }
        }
        row
    }
}

fn task_rank(task: &str) -> u8 {
    match task {
        "description" => 0,
        "definition" => 1,
        _ => 2,
    }
}

fn summarize(rows: &[MetricRow], task: &str) -> TaskSummary {
    let task_rows: Vec<&MetricRow> = rows.iter().filter(|r| r.task == task).collect();
    let done: Vec<&MetricRow> = task_rows.iter().copied().filter(|r| r.error.is_none()).collect();
    let mut summary =
        TaskSummary { items: task_rows.len(), failures: task_rows.len() - done.len(), ..Default::default() };
    match task {
        "description" => {
            summary.embedding_f1 =
                mean_prf(&done, |r| r.embedding_precision, |r| r.embedding_recall, |r| r.embedding_f1);
            summary.rouge_l = mean_prf(&done, |r| r.rouge_l_precision, |r| r.rouge_l_recall, |r| r.rouge_l);
            summary.bleu = mean_of(&done, |r| r.bleu);
        }
        "definition" => summary.identifier_similarity = mean_of(&done, |r| r.identifier_similarity),
        _ => {
            let labels: Vec<bool> = done.iter().filter_map(|r| r.label).collect();
            let predictions: Vec<Option<bool>> =
                done.iter().map(|r| r.prediction.as_deref().and_then(crate::llm::parse_verdict)).collect();
            summary.abstentions = predictions.iter().filter(|p| p.is_none()).count();
            summary.positives = labels.iter().filter(|l| **l).count();
            summary.negatives = labels.len() - summary.positives;
            summary.accuracy = selection_accuracy(&predictions, &labels).ok();
            summary.abstention_free_accuracy = abstention_free_accuracy(&predictions, &labels).ok();
            if !labels.is_empty() {
                let majority = majority_label(&labels);
                summary.majority_rate =
                    Some(labels.iter().filter(|l| **l == majority).count() as f64 / labels.len() as f64);
            }
        }
    }
    summary
}

/// Regenerates descriptions, definition names and selection verdicts for
/// held-out schemas and scores them against the originals. Every schema
/// must belong to the split's test part.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_run(
    tests: &[TestSchema],
    split: &CorpusSplit,
    backend: &dyn GenerationBackend,
    embedder: &dyn TokenEmbedder,
    scorer: &dyn IdentifierScorer,
    builder: &PromptBuilder,
    options: EvalOptions,
) -> Result<MetricReport, MetricError> {
    if tests.is_empty() {
        return Err(MetricError::Empty);
    }
    if let Some(t) = tests.iter().find(|t| !split.test.contains(&t.id)) {
        return Err(MetricError::NotInTestSplit(t.id.clone()));
    }
    let items: Vec<TrainingExample> = tests
        .iter()
        .flat_map(|t| {
            extract_descriptions(&t.id, &t.schema)
                .into_iter()
                .map(TrainingExample::Description)
                .chain(extract_definitions(&t.id, &t.schema).into_iter().map(TrainingExample::Definition))
                .chain(t.selection.iter().cloned().map(TrainingExample::Selection))
        })
        .collect();

    let scorers = Scorers { backend, embedder, scorer, builder, options };
    let mut rows: Vec<MetricRow> = items.par_iter().map(|item| scorers.score(item)).collect();
    rows.sort_by(|a, b| {
        (&a.schema_id, task_rank(&a.task), &a.location, &a.keyword, a.label).cmp(&(
            &b.schema_id,
            task_rank(&b.task),
            &b.location,
            &b.keyword,
            b.label,
        ))
    });

    Ok(MetricReport {
        backend: backend.identity(),
        embedder: embedder.name(),
        scorer: scorer.name(),
        schemas: tests.len(),
        description: summarize(&rows, "description"),
        definition: summarize(&rows, "definition"),
        selection: summarize(&rows, "selection"),
        rows,
    })
}
