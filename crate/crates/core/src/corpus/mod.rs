//! Mining manually authored schemas into training and evaluation examples.

mod fetch;
mod loader;
mod mine;
pub mod selection;
mod split;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::pointer::Pointer;
use crate::schema::{strip_annotations, walk, SchemaError, SchemaNode};

pub use fetch::{
    fetch_conforming_documents, Candidate, DocumentFetcher, FetchError, FetchOutcome, HttpSearchConfig,
    HttpSearchFetcher, LocalDirFetcher,
};
pub use loader::{load_corpus, Corpus, CorpusEntry};
pub use mine::{mine_corpus, MinedCorpus, MiningStats};
pub use selection::{generate_property_examples, SELECTION_KEYWORDS};
pub use split::{split_corpus, CorpusSplit, SplitRatios};

/// Characters of canonical schema text given to the model.
pub const FRAGMENT_CHARS: usize = 100;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("split ratios must be non-negative and sum to 1 (got {0:?})")]
    BadRatios([f64; 3]),
    #[error("document fetch failed after {attempts} attempt(s): {message}")]
    Fetch { attempts: u32, message: String },
    #[error("prescribed filename must not be empty")]
    EmptyFilename,
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Metadata { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DescriptionExample {
    pub schema_id: String,
    pub location: Pointer,
    pub fragment: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DefinitionExample {
    pub schema_id: String,
    pub name: String,
    pub definition_schema: SchemaNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PropertySelectionExample {
    pub schema_id: String,
    /// Instance-shaped path (`/properties/a/items/...`) with references
    /// followed.
    pub location: Pointer,
    pub keyword: String,
    pub context_snippet: String,
    pub label: bool,
}

/// One mined example of any task. Serialized as a flat object with a
/// `task` discriminator (`description`, `definition` or `selection`).
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum TrainingExample {
    Description(DescriptionExample),
    Definition(DefinitionExample),
    Selection(PropertySelectionExample),
}

impl TrainingExample {
    pub fn task(&self) -> &'static str {
        match self {
            TrainingExample::Description(_) => "description",
            TrainingExample::Definition(_) => "definition",
            TrainingExample::Selection(_) => "selection",
        }
    }

    pub fn schema_id(&self) -> &str {
        match self {
            TrainingExample::Description(e) => &e.schema_id,
            TrainingExample::Definition(e) => &e.schema_id,
            TrainingExample::Selection(e) => &e.schema_id,
        }
    }

    /// Stable id of the request an example turns into.
    pub fn request_id(&self) -> String {
        match self {
            TrainingExample::Description(e) => format!("{}#description#{}", e.schema_id, e.location),
            TrainingExample::Definition(e) => format!("{}#definition#{}", e.schema_id, e.name),
            TrainingExample::Selection(e) => format!("{}#selection#{}#{}", e.schema_id, e.location, e.keyword),
        }
    }

    /// Key for deterministic output ordering.
    pub fn sort_key(&self) -> (String, u8, String, String) {
        match self {
            TrainingExample::Description(e) => (e.schema_id.clone(), 0, e.location.to_string(), String::new()),
            TrainingExample::Definition(e) => (e.schema_id.clone(), 1, e.name.clone(), String::new()),
            TrainingExample::Selection(e) => {
                (e.schema_id.clone(), 2, e.location.to_string(), format!("{}:{}", e.keyword, e.label))
            }
        }
    }
}

impl Serialize for TrainingExample {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let body = match self {
            TrainingExample::Description(e) => serde_json::to_value(e),
            TrainingExample::Definition(e) => serde_json::to_value(e),
            TrainingExample::Selection(e) => serde_json::to_value(e),
        }
        .map_err(serde::ser::Error::custom)?;
        let mut map = Map::new();
        map.insert("task".into(), Value::String(self.task().into()));
        if let Value::Object(fields) = body {
            map.extend(fields);
        }
        Value::Object(map).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TrainingExample {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let Value::Object(mut map) = Value::deserialize(deserializer)? else {
            return Err(D::Error::custom("training example must be an object"));
        };
        let task = map.shift_remove("task").ok_or_else(|| D::Error::missing_field("task"))?;
        let body = Value::Object(map);
        match task.as_str() {
            Some("description") => serde_json::from_value(body).map(TrainingExample::Description),
            Some("definition") => serde_json::from_value(body).map(TrainingExample::Definition),
            Some("selection") => serde_json::from_value(body).map(TrainingExample::Selection),
            _ => return Err(D::Error::custom(format!("unknown task {task}"))),
        }
        .map_err(D::Error::custom)
    }
}

/// First `FRAGMENT_CHARS` characters of the canonical, annotation-free form.
pub fn fragment_of(node: &SchemaNode) -> String {
    strip_annotations(node).to_canonical().chars().take(FRAGMENT_CHARS).collect()
}

/// One example per walked node that carries a non-empty description.
///
/// A node is skipped when its fragment happens to contain the description
/// verbatim, so no fragment ever leaks its own answer.
pub fn extract_descriptions(schema_id: &str, schema: &SchemaNode) -> Vec<DescriptionExample> {
    walk(schema)
        .into_iter()
        .filter_map(|(location, node)| {
            let description = node.description()?.trim();
            if description.is_empty() {
                return None;
            }
            let fragment = fragment_of(node);
            if fragment.contains(description) {
                log::debug!("{schema_id}{location}: description appears in its own fragment, skipped");
                return None;
            }
            Some(DescriptionExample {
                schema_id: schema_id.to_string(),
                location,
                fragment,
                description: description.to_string(),
            })
        })
        .collect()
}

/// One example per root definition, annotations stripped.
pub fn extract_definitions(schema_id: &str, schema: &SchemaNode) -> Vec<DefinitionExample> {
    schema
        .definitions
        .iter()
        .filter(|(name, _)| !name.is_empty())
        .map(|(name, def)| DefinitionExample {
            schema_id: schema_id.to_string(),
            name: name.clone(),
            definition_schema: strip_annotations(def),
        })
        .collect()
}
