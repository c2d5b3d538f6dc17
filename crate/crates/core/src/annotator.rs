//! Applies the three model tasks to a discovered schema: keyword
//! filtering, definition naming, and description generation.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::corpus::fragment_of;
use crate::corpus::selection::{context_snippet, keyword_value, property_name, remove_keyword, SELECTION_KEYWORDS};
use crate::discovery::{definition_index, DiscoveredSchema};
use crate::llm::{classify, generate, GenerationBackend, LlmError, PromptBuilder, PromptRequest};
use crate::pointer::Pointer;
use crate::schema::{resolve_mut, walk, Annotation, SchemaNode};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnotationReport {
    pub backend: String,
    pub descriptions_added: usize,
    pub described: Vec<Pointer>,
    /// Description requests that produced only whitespace.
    pub empty_generations: usize,
    /// Old definition name to new name, changed names only.
    pub renames: BTreeMap<String, String>,
    pub keywords_removed: Vec<(Pointer, String)>,
    pub keywords_kept: usize,
    pub abstentions: usize,
}

impl AnnotationReport {
    fn absorb(&mut self, other: AnnotationReport) {
        if self.backend.is_empty() {
            self.backend = other.backend;
        }
        self.descriptions_added += other.descriptions_added;
        self.described.extend(other.described);
        self.empty_generations += other.empty_generations;
        self.renames.extend(other.renames);
        self.keywords_removed.extend(other.keywords_removed);
        self.keywords_kept += other.keywords_kept;
        self.abstentions += other.abstentions;
    }
}

/// A backend failure, with everything applied before it.
#[derive(Debug, Error)]
#[error("annotation aborted: {error}")]
pub struct AnnotationFailure {
    pub partial: AnnotationReport,
    #[source]
    pub error: LlmError,
}

pub type AnnotationResult = Result<(DiscoveredSchema, AnnotationReport), Box<AnnotationFailure>>;

fn abort(partial: AnnotationReport, error: LlmError) -> Box<AnnotationFailure> {
    Box::new(AnnotationFailure { partial, error })
}

fn report_for(backend: &dyn GenerationBackend) -> AnnotationReport {
    AnnotationReport { backend: backend.identity(), ..Default::default() }
}

/// Where a selection keyword lives: on the node itself, or as membership
/// of the property in its parent's `required` list.
#[derive(Debug, Clone)]
struct Candidate {
    node: Pointer,
    location: Pointer,
    keyword: &'static str,
    request: PromptRequest,
}

fn selection_candidates(root: &SchemaNode, builder: &PromptBuilder) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (at, node) in walk(root) {
        for keyword in SELECTION_KEYWORDS {
            if let Some(value) = keyword_value(node, keyword) {
                let request = builder.selection_snippet(&context_snippet(&at, keyword, &value));
                out.push(Candidate { node: at.clone(), location: at.clone(), keyword, request });
            }
        }
        for name in &node.required {
            let location = at.child("properties").child(name.as_str());
            let request = builder.selection_snippet(&context_snippet(&location, "required", &Value::Bool(true)));
            out.push(Candidate { node: at.clone(), location, keyword: "required", request });
        }
    }
    out
}

/// Asks the classifier about every selection keyword present and deletes
/// the rejected ones. Abstentions keep the keyword.
pub fn filter_properties(
    d: &DiscoveredSchema,
    backend: &dyn GenerationBackend,
    builder: &PromptBuilder,
) -> AnnotationResult {
    let candidates = selection_candidates(&d.root, builder);
    let verdicts: Vec<Result<bool, LlmError>> = candidates.par_iter().map(|c| classify(backend, &c.request)).collect();

    let mut out = d.clone();
    let mut report = report_for(backend);
    for (candidate, verdict) in candidates.iter().zip(verdicts) {
        match verdict {
            Ok(true) => report.keywords_kept += 1,
            Ok(false) => {
                let node = resolve_mut(&mut out.root, &candidate.node).expect("candidate pointers come from walk");
                let removed = if candidate.keyword == "required" {
                    property_name(&candidate.location).is_some_and(|name| node.required.remove(&name))
                } else {
                    remove_keyword(node, candidate.keyword)
                };
                if removed {
                    report.keywords_removed.push((candidate.location.clone(), candidate.keyword.to_string()));
                }
            }
            Err(e) if e.is_abstention() => {
                report.abstentions += 1;
                report.keywords_kept += 1;
            }
            Err(e) => return Err(abort(report, e)),
        }
    }
    Ok((out, report))
}

/// Turns free model text into an identifier: words are split on anything
/// outside `[A-Za-z0-9_]` and joined in camel case, leading digits are
/// dropped. Only the first non-empty line is considered.
pub fn sanitize_identifier(text: &str) -> String {
    let line = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let mut out = String::new();
    for (i, word) in
        line.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).filter(|w| !w.is_empty()).enumerate()
    {
        if i == 0 || out.is_empty() {
            out.push_str(word);
        } else {
            let mut chars = word.chars();
            if let Some(first) = chars.next() {
                out.extend(first.to_uppercase());
                out.push_str(chars.as_str());
            }
        }
    }
    out.trim_start_matches(|c: char| c.is_ascii_digit()).to_string()
}

fn unique_name(base: &str, used: &mut BTreeSet<String>) -> String {
    let mut name = base.to_string();
    let mut n = 2;
    while used.contains(&name) {
        name = format!("{base}{n}");
        n += 1;
    }
    used.insert(name.clone());
    name
}

fn rename_refs(node: &mut SchemaNode, renames: &BTreeMap<String, String>) {
    if let Some(reference) = &node.reference {
        if let Ok(ptr) = Pointer::from_fragment(reference) {
            let segments = ptr.segments();
            if segments.len() >= 2 && segments[0] == "definitions" {
                if let Some(new) = renames.get(&segments[1]) {
                    let mut rewritten = segments.to_vec();
                    rewritten[1] = new.clone();
                    node.reference = Some(Pointer::from_segments(rewritten).to_fragment());
                }
            }
        }
    }
    for sub in node.properties.values_mut().chain(node.definitions.values_mut()) {
        rename_refs(sub, renames);
    }
    if let Some(items) = node.items.as_deref_mut() {
        rename_refs(items, renames);
    }
}

/// Renames placeholder `defn<i>` definitions to generated identifiers and
/// rewrites every reference to them.
pub fn name_definitions(
    d: &DiscoveredSchema,
    backend: &dyn GenerationBackend,
    builder: &PromptBuilder,
) -> AnnotationResult {
    let targets: Vec<(String, PromptRequest)> = d
        .definitions()
        .into_iter()
        .filter(|(name, _)| definition_index(name).is_some())
        .map(|(name, def)| (name.to_string(), builder.definition(def)))
        .collect();
    let outputs: Vec<Result<String, LlmError>> = targets.par_iter().map(|(_, r)| generate(backend, r)).collect();

    let mut report = report_for(backend);
    let mut used: BTreeSet<String> =
        d.root.definitions.keys().filter(|n| definition_index(n).is_none()).cloned().collect();
    let mut renames = BTreeMap::new();
    for ((old, _), output) in targets.iter().zip(outputs) {
        let generated = match output {
            Ok(text) => sanitize_identifier(&text),
            Err(e) => return Err(abort(report, e)),
        };
        let base = if generated.is_empty() { old.as_str() } else { generated.as_str() };
        let new = unique_name(base, &mut used);
        if new != *old {
            renames.insert(old.clone(), new.clone());
            report.renames.insert(old.clone(), new);
        }
    }

    let mut out = d.clone();
    let definitions = std::mem::take(&mut out.root.definitions);
    out.root.definitions =
        definitions.into_iter().map(|(name, def)| (renames.get(&name).cloned().unwrap_or(name), def)).collect();
    rename_refs(&mut out.root, &renames);
    Ok((out, report))
}

/// Root, every named property, and every definition.
fn description_targets(root: &SchemaNode) -> Vec<Pointer> {
    walk(root)
        .into_iter()
        .map(|(at, _)| at)
        .filter(|at| {
            let segments = at.segments();
            at.is_root() || property_name(at).is_some() || (segments.len() == 2 && segments[0] == "definitions")
        })
        .collect()
}

/// Generates and attaches a description for each target node from its
/// fragment.
pub fn annotate_descriptions(
    d: &DiscoveredSchema,
    backend: &dyn GenerationBackend,
    builder: &PromptBuilder,
) -> AnnotationResult {
    let mut report = report_for(backend);
    let mut requests = Vec::new();
    for at in description_targets(&d.root) {
        let node = crate::schema::resolve(&d.root, &at).expect("targets come from walk");
        match builder.description(&fragment_of(node)) {
            Ok(request) => requests.push((at, request)),
            Err(e) => return Err(abort(report, e)),
        }
    }
    let outputs: Vec<Result<String, LlmError>> = requests.par_iter().map(|(_, r)| generate(backend, r)).collect();

    let mut out = d.clone();
    for ((at, _), output) in requests.into_iter().zip(outputs) {
        let text = match output {
            Ok(text) => text,
            Err(e) => return Err(abort(report, e)),
        };
        if text.is_empty() {
            report.empty_generations += 1;
            continue;
        }
        let node = resolve_mut(&mut out.root, &at).expect("targets come from walk");
        node.annotations.insert(Annotation::Description, text);
        report.descriptions_added += 1;
        report.described.push(at);
    }
    Ok((out, report))
}

/// Which stages to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct Stages {
    pub filter: bool,
    pub name: bool,
    pub describe: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Self { filter: true, name: true, describe: true }
    }
}

/// Filter, then name, then describe.
pub fn annotate(
    d: &DiscoveredSchema,
    backend: &dyn GenerationBackend,
    builder: &PromptBuilder,
    stages: Stages,
) -> AnnotationResult {
    type Stage = fn(&DiscoveredSchema, &dyn GenerationBackend, &PromptBuilder) -> AnnotationResult;
    let pipeline: [(bool, Stage); 3] =
        [(stages.filter, filter_properties), (stages.name, name_definitions), (stages.describe, annotate_descriptions)];
    let mut current = d.clone();
    let mut report = report_for(backend);
    for (enabled, stage) in pipeline {
        if !enabled {
            continue;
        }
        match stage(&current, backend, builder) {
            Ok((next, part)) => {
                current = next;
                report.absorb(part);
            }
            Err(mut failure) => {
                let mut partial = report;
                partial.absorb(std::mem::take(&mut failure.partial));
                failure.partial = partial;
                return Err(failure);
            }
        }
    }
    Ok((current, report))
}
