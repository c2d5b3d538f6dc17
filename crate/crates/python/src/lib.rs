//! Python bindings. JSON values cross the boundary as Python objects
//! (dict, list, str, numbers); schema and document arguments may also be
//! given as JSON text.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde_json::Value;

use schema_annotator::annotator::{annotate as run_annotate, Stages};
use schema_annotator::corpus::selection::generate_property_examples;
use schema_annotator::corpus::{extract_definitions, extract_descriptions, split_corpus, SplitRatios, TrainingExample};
use schema_annotator::discovery::{discover_schema, hoist_definitions, DiscoveredSchema};
use schema_annotator::json::parse_json;
use schema_annotator::llm::{PromptBuilder, StubBackend};
use schema_annotator::metrics::{self, OneHotEmbedder, TokenEmbedder, TrigramEmbedder, TrigramIdentifierScorer};
use schema_annotator::schema::{strip_annotations, validate, SchemaNode};

fn to_json(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = if obj.is_instance_of::<PyString>() {
        obj.extract()?
    } else {
        obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?
    };
    parse_json(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn to_docs(docs: &Bound<'_, PyAny>) -> PyResult<Vec<Value>> {
    match to_json(docs)? {
        Value::Array(items) => Ok(items),
        _ => Err(PyValueError::new_err("expected a list of documents")),
    }
}

/// A JSON Schema.
#[pyclass(name = "Schema", module = "schema_annotator", eq, frozen, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PySchema {
    node: SchemaNode,
}

#[pymethods]
impl PySchema {
    #[new]
    fn new(schema: &Bound<'_, PyAny>) -> PyResult<Self> {
        let node = SchemaNode::from_value(&to_json(schema)?).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { node })
    }

    /// Infers a schema all `docs` satisfy, hoisting key sets seen at least
    /// `min_count` times into definitions.
    #[staticmethod]
    #[pyo3(signature = (docs, min_count=2))]
    fn discover(docs: &Bound<'_, PyAny>, min_count: usize) -> PyResult<Self> {
        let d = discover_schema(&to_docs(docs)?, min_count).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { node: d.root })
    }

    /// Violations of `instance` as dicts with location, keyword, message.
    fn validate<'py>(&self, py: Python<'py>, instance: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        let violations = validate(&self.node, &to_json(instance)?).map_err(|e| PyValueError::new_err(e.to_string()))?;
        to_py(py, &violations)
    }

    fn is_valid(&self, instance: &Bound<'_, PyAny>) -> PyResult<bool> {
        Ok(validate(&self.node, &to_json(instance)?).map_err(|e| PyValueError::new_err(e.to_string()))?.is_empty())
    }

    #[pyo3(signature = (min_count=2))]
    fn hoist(&self, min_count: usize) -> Self {
        Self { node: hoist_definitions(&self.node, min_count).root }
    }

    fn strip_annotations(&self) -> Self {
        Self { node: strip_annotations(&self.node) }
    }

    fn definitions(&self) -> Vec<String> {
        self.node.definitions.keys().cloned().collect()
    }

    fn to_json(&self) -> String {
        self.node.to_canonical()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.node.to_value())
    }

    fn __repr__(&self) -> String {
        format!("Schema({})", self.node.to_canonical())
    }
}

#[pyfunction]
#[pyo3(signature = (docs, min_count=2))]
fn discover(docs: &Bound<'_, PyAny>, min_count: usize) -> PyResult<PySchema> {
    PySchema::discover(docs, min_count)
}

/// Runs the filter, name and describe stages with the offline stub
/// backend. Returns the annotated schema and the report.
#[pyfunction]
#[pyo3(signature = (schema, filter=true, name=true, describe=true))]
fn annotate<'py>(
    py: Python<'py>,
    schema: &PySchema,
    filter: bool,
    name: bool,
    describe: bool,
) -> PyResult<(PySchema, Bound<'py, PyAny>)> {
    let stages = Stages { filter, name, describe };
    let d = DiscoveredSchema::from_schema(schema.node.clone());
    match run_annotate(&d, &StubBackend, &PromptBuilder::default(), stages) {
        Ok((out, report)) => Ok((PySchema { node: out.root }, to_py(py, &report)?)),
        Err(failure) => Err(PyRuntimeError::new_err(failure.error.to_string())),
    }
}

/// ROUGE-L as (precision, recall, f1).
#[pyfunction]
fn rouge_l(candidate: &str, reference: &str) -> (f64, f64, f64) {
    let p = metrics::rouge_l(candidate, reference);
    (p.precision, p.recall, p.f1)
}

#[pyfunction]
#[pyo3(signature = (candidate, reference, max_n=4))]
fn bleu(candidate: &str, reference: &str, max_n: usize) -> f64 {
    metrics::bleu(candidate, reference, max_n)
}

/// Greedy-matching F1 as (precision, recall, f1). `embedder` is
/// "trigram" or "one-hot".
#[pyfunction]
#[pyo3(signature = (candidate, reference, embedder="trigram"))]
fn embedding_f1(candidate: &str, reference: &str, embedder: &str) -> PyResult<(f64, f64, f64)> {
    let e: Box<dyn TokenEmbedder> = match embedder {
        "trigram" => Box::new(TrigramEmbedder::default()),
        "one-hot" => {
            Box::new(OneHotEmbedder::new(metrics::tokenize(candidate).len() + metrics::tokenize(reference).len() + 1))
        }
        other => return Err(PyValueError::new_err(format!("unknown embedder {other:?}"))),
    };
    let p = metrics::embedding_f1(candidate, reference, e.as_ref());
    Ok((p.precision, p.recall, p.f1))
}

#[pyfunction]
fn identifier_similarity(a: &str, b: &str) -> PyResult<f64> {
    metrics::identifier_similarity(a, b, &TrigramIdentifierScorer).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn split_subtokens(identifier: &str) -> Vec<String> {
    metrics::split_subtokens(identifier)
}

/// Seeded train/validation/test partition of schema ids.
#[pyfunction]
#[pyo3(signature = (ids, seed=0, train=0.8, validation=0.1, test=0.1))]
fn split<'py>(
    py: Python<'py>,
    ids: Vec<String>,
    seed: u64,
    train: f64,
    validation: f64,
    test: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let s = split_corpus(&ids, SplitRatios { train, validation, test }, seed)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &s)
}

/// Description and definition examples of one manual schema; selection
/// examples too when `docs` are given.
#[pyfunction]
#[pyo3(signature = (schema_id, schema, docs=None, min_count=2))]
fn extract<'py>(
    py: Python<'py>,
    schema_id: &str,
    schema: &PySchema,
    docs: Option<&Bound<'py, PyAny>>,
    min_count: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let mut out: Vec<TrainingExample> = extract_descriptions(schema_id, &schema.node)
        .into_iter()
        .map(TrainingExample::Description)
        .chain(extract_definitions(schema_id, &schema.node).into_iter().map(TrainingExample::Definition))
        .collect();
    if let Some(docs) = docs {
        let discovered =
            discover_schema(&to_docs(docs)?, min_count).map_err(|e| PyValueError::new_err(e.to_string()))?;
        out.extend(
            generate_property_examples(schema_id, &schema.node, &discovered)
                .into_iter()
                .map(TrainingExample::Selection),
        );
    }
    to_py(py, &out)
}

#[pymodule]
#[pyo3(name = "schema_annotator")]
fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySchema>()?;
    m.add_function(wrap_pyfunction!(discover, m)?)?;
    m.add_function(wrap_pyfunction!(annotate, m)?)?;
    m.add_function(wrap_pyfunction!(rouge_l, m)?)?;
    m.add_function(wrap_pyfunction!(bleu, m)?)?;
    m.add_function(wrap_pyfunction!(embedding_f1, m)?)?;
    m.add_function(wrap_pyfunction!(identifier_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(split_subtokens, m)?)?;
    m.add_function(wrap_pyfunction!(split, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    Ok(())
}
