use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{
    extract_definitions, extract_descriptions, fetch_conforming_documents, generate_property_examples, Corpus,
    CorpusEntry, CorpusError, DocumentFetcher, TrainingExample,
};
use crate::discovery::{discover_schema, DiscoveredSchema};
use crate::retry::RetryPolicy;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MiningStats {
    pub schemas: usize,
    pub descriptions: usize,
    pub definitions: usize,
    pub selection_positive: usize,
    pub selection_negative: usize,
    pub documents: usize,
    pub rejected_documents: usize,
    /// Schemas without a prescribed filename or without conforming documents.
    pub schemas_without_documents: usize,
}

#[derive(Debug, Clone, Default)]
pub struct MinedCorpus {
    /// Sorted by schema id, then task, then location.
    pub examples: Vec<TrainingExample>,
    pub discovered: BTreeMap<String, DiscoveredSchema>,
    pub stats: MiningStats,
}

struct Mined {
    id: String,
    examples: Vec<TrainingExample>,
    discovered: Option<DiscoveredSchema>,
    documents: usize,
    rejected: usize,
}

fn mine_entry(
    entry: &CorpusEntry,
    fetcher: Option<&dyn DocumentFetcher>,
    min_count: usize,
    retry: &RetryPolicy,
) -> Result<Mined, CorpusError> {
    let mut examples: Vec<TrainingExample> = extract_descriptions(&entry.id, &entry.schema)
        .into_iter()
        .map(TrainingExample::Description)
        .chain(extract_definitions(&entry.id, &entry.schema).into_iter().map(TrainingExample::Definition))
        .collect();

    let mut mined = Mined { id: entry.id.clone(), examples: Vec::new(), discovered: None, documents: 0, rejected: 0 };
    if let (Some(fetcher), Some(name)) = (fetcher, entry.prescribed_name.as_deref()) {
        let outcome = fetch_conforming_documents(&entry.schema, name, fetcher, retry)?;
        mined.documents = outcome.documents.len();
        mined.rejected = outcome.unparseable + outcome.nonconforming;
        if let Ok(discovered) = discover_schema(&outcome.documents, min_count) {
            examples.extend(
                generate_property_examples(&entry.id, &entry.schema, &discovered)
                    .into_iter()
                    .map(TrainingExample::Selection),
            );
            mined.discovered = Some(discovered);
        }
    }
    mined.examples = examples;
    Ok(mined)
}

/// Mines every schema in parallel. Output order does not depend on thread
/// scheduling.
pub fn mine_corpus(
    corpus: &Corpus,
    fetcher: Option<&dyn DocumentFetcher>,
    min_count: usize,
    retry: &RetryPolicy,
) -> Result<MinedCorpus, CorpusError> {
    let results: Vec<Mined> = corpus
        .entries
        .par_iter()
        .map(|entry| mine_entry(entry, fetcher, min_count, retry))
        .collect::<Result<_, _>>()?;

    let mut out = MinedCorpus::default();
    out.stats.schemas = results.len();
    for mined in results {
        out.stats.documents += mined.documents;
        out.stats.rejected_documents += mined.rejected;
        match mined.discovered {
            Some(d) => {
                out.discovered.insert(mined.id, d);
            }
            None => out.stats.schemas_without_documents += 1,
        }
        out.examples.extend(mined.examples);
    }
    for example in &out.examples {
        match example {
            TrainingExample::Description(_) => out.stats.descriptions += 1,
            TrainingExample::Definition(_) => out.stats.definitions += 1,
            TrainingExample::Selection(e) if e.label => out.stats.selection_positive += 1,
            TrainingExample::Selection(_) => out.stats.selection_negative += 1,
        }
    }
    out.examples.sort_by_cached_key(TrainingExample::sort_key);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_corpus, LocalDirFetcher};

    #[test]
    fn mines_small_corpus_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        std::fs::write(
            root.join("app.json"),
            r#"{"type":"object","properties":{
                "name":{"type":"string","minLength":1,"description":"Application name"},
                "tag":{"type":"string"}}}"#,
        )
        .unwrap();
        std::fs::write(root.join("plain.json"), r#"{"description":"Anything at all"}"#).unwrap();
        std::fs::write(root.join("metadata.json"), r#"{"app":"app.config.json"}"#).unwrap();
        let docs = root.join("documents/app");
        std::fs::create_dir_all(&docs).unwrap();
        std::fs::write(docs.join("app.config.json"), r#"{"name":"demo","tag":"v1"}"#).unwrap();
        std::fs::create_dir_all(docs.join("x")).unwrap();
        std::fs::write(docs.join("x/app.config.json"), r#"{"name":"","tag":"v22"}"#).unwrap();

        let corpus = load_corpus(root).unwrap();
        let fetcher = LocalDirFetcher::new(corpus.documents_dir());
        let a = mine_corpus(&corpus, Some(&fetcher), 2, &RetryPolicy::no_delay(1)).unwrap();
        let b = mine_corpus(&corpus, Some(&fetcher), 2, &RetryPolicy::no_delay(1)).unwrap();
        assert_eq!(a.examples, b.examples);
        assert_eq!(a.stats.documents, 1);
        assert_eq!(a.stats.rejected_documents, 1);
        assert_eq!(a.stats.descriptions, 2);
        assert_eq!(a.stats.schemas_without_documents, 1);
        // minLength positive on name, negative on tag (discovered length 2).
        assert!(a.stats.selection_positive >= 1);
        assert!(a.examples.iter().any(|e| matches!(e, TrainingExample::Selection(s)
            if !s.label && s.context_snippet == r#"{"properties":{"tag":{"minLength":2}}}"#)));
        let ids: Vec<&str> = a.examples.iter().map(TrainingExample::schema_id).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }
}
