//! JSON Schema representation over a fixed keyword vocabulary: parsing,
//! canonical serialization, traversal, validation and annotation stripping.

mod node;
mod strip;
mod traverse;
mod validate;

use thiserror::Error;

use crate::pointer::Pointer;

pub use node::{Annotation, JsonType, SchemaNode};
pub use strip::strip_annotations;
pub use traverse::{resolve, resolve_mut, resolve_reference, walk};
pub use validate::{validate, Violation, VALIDATED_KEYWORDS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("JSON syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("keyword `{keyword}` at `{pointer}` must be {expected}")]
    KeywordType { pointer: Pointer, keyword: String, expected: &'static str },
    #[error("conflicting keywords at `{pointer}`: {message}")]
    KeywordConflict { pointer: Pointer, message: String },
    #[error("value at `{pointer}` is not a schema (expected an object or boolean)")]
    NotASchema { pointer: Pointer },
    #[error("cannot resolve `{pointer}`")]
    Unresolvable { pointer: String },
    #[error("reference cycle through `{reference}` at instance location `{location}`")]
    RefCycle { reference: String, location: Pointer },
}
