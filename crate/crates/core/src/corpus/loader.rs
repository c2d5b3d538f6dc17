//! Reading a corpus directory: `*.json` schema files plus a
//! `metadata.json` sidecar mapping schema ids to prescribed filenames.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::CorpusError;
use crate::schema::SchemaNode;

pub const METADATA_FILE: &str = "metadata.json";
pub const DOCUMENTS_DIR: &str = "documents";

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    /// File stem of the schema file.
    pub id: String,
    pub path: PathBuf,
    pub schema: SchemaNode,
    pub prescribed_name: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub root: PathBuf,
    /// Sorted by id.
    pub entries: Vec<CorpusEntry>,
    /// Files that could not be parsed as schemas, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl Corpus {
    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&CorpusEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Default location of locally stored conforming documents.
    pub fn documents_dir(&self) -> PathBuf {
        self.root.join(DOCUMENTS_DIR)
    }
}

fn io_error(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io { path: path.display().to_string(), source }
}

fn read_metadata(path: &Path) -> Result<BTreeMap<String, String>, CorpusError> {
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CorpusError::Metadata { path: path.display().to_string(), message: e.to_string() })
}

/// Loads every top-level `*.json` file except the sidecar. Unparseable
/// schemas are reported in `skipped`, not treated as fatal.
pub fn load_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    let metadata = read_metadata(&dir.join(METADATA_FILE))?;
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| io_error(dir, e))? {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        let is_json = path.extension().is_some_and(|x| x == "json");
        let is_sidecar = path.file_name().is_some_and(|n| n == METADATA_FILE);
        if path.is_file() && is_json && !is_sidecar {
            paths.push(path);
        }
    }
    paths.sort();

    let mut corpus = Corpus { root: dir.to_path_buf(), ..Default::default() };
    for path in paths {
        let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
        match SchemaNode::parse(&text) {
            Ok(schema) => {
                let prescribed_name = metadata.get(&id).cloned();
                corpus.entries.push(CorpusEntry { id, path, schema, prescribed_name });
            }
            Err(e) => {
                log::warn!("{}: skipped: {e}", path.display());
                corpus.skipped.push((id, e.to_string()));
            }
        }
    }
    for id in metadata.keys().filter(|id| corpus.get(id).is_none()) {
        log::warn!("{}: metadata names unknown schema {id}", dir.display());
    }
    Ok(corpus)
}
