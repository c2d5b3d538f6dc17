use serde_json::Value;

use super::{Annotation, SchemaNode};

/// Applicator keywords whose value is a single subschema.
const SCHEMA_VALUED: &[&str] = &[
    "not",
    "if",
    "then",
    "else",
    "contains",
    "propertyNames",
    "additionalItems",
    "additionalProperties",
    "unevaluatedItems",
    "unevaluatedProperties",
    "items",
];
/// Applicator keywords holding an array of subschemas.
const SCHEMA_ARRAYS: &[&str] = &["allOf", "anyOf", "oneOf", "prefixItems", "items"];
/// Applicator keywords holding a name → subschema map.
const SCHEMA_MAPS: &[&str] =
    &["properties", "definitions", "$defs", "patternProperties", "dependentSchemas", "dependencies"];

/// Removes `title`, `description` and `$comment` at every depth, including
/// inside subschemas carried opaquely (`oneOf`, `$defs`, ...).
pub fn strip_annotations(node: &SchemaNode) -> SchemaNode {
    let mut out = node.clone();
    strip_in_place(&mut out);
    out
}

fn strip_in_place(node: &mut SchemaNode) {
    node.annotations.clear();
    node.properties.values_mut().for_each(strip_in_place);
    node.definitions.values_mut().for_each(strip_in_place);
    if let Some(items) = node.items.as_deref_mut() {
        strip_in_place(items);
    }
    for (keyword, value) in node.unknown.iter_mut() {
        strip_applicator(keyword, value);
    }
}

fn strip_applicator(keyword: &str, value: &mut Value) {
    match value {
        Value::Object(_) if SCHEMA_VALUED.contains(&keyword) => strip_raw_schema(value),
        Value::Array(items) if SCHEMA_ARRAYS.contains(&keyword) => items.iter_mut().for_each(strip_raw_schema),
        Value::Object(map) if SCHEMA_MAPS.contains(&keyword) => map.values_mut().for_each(strip_raw_schema),
        _ => {}
    }
}

fn strip_raw_schema(value: &mut Value) {
    let Value::Object(map) = value else { return };
    for annotation in Annotation::ALL {
        map.shift_remove(annotation.keyword());
    }
    for (keyword, sub) in map.iter_mut() {
        strip_applicator(keyword, sub);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::walk;

    fn strip(text: &str) -> String {
        strip_annotations(&SchemaNode::parse(text).unwrap()).to_canonical()
    }

    #[test]
    fn removes_title() {
        assert_eq!(strip(r#"{"title":"T","type":"string"}"#), r#"{"type":"string"}"#);
        assert_eq!(strip("{}"), "{}");
    }

    #[test]
    fn recursive() {
        assert_eq!(
            strip(r#"{"properties":{"a":{"description":"d","type":"integer"}}}"#),
            r#"{"properties":{"a":{"type":"integer"}}}"#
        );
    }

    #[test]
    fn reaches_definitions_items_and_opaque_applicators() {
        let text = r##"{
          "$comment": "c",
          "definitions": {"x": {"title": "X", "items": {"description": "i"}}},
          "oneOf": [{"description": "one", "properties": {"p": {"title": "p"}}}],
          "$defs": {"y": {"description": "y", "anyOf": [{"$comment": "z"}]}},
          "examples": [{"description": "kept, this is data"}]
        }"##;
        let stripped = strip_annotations(&SchemaNode::parse(text).unwrap());
        for (_, node) in walk(&stripped) {
            assert!(node.annotations.is_empty());
        }
        let canonical = stripped.to_canonical();
        for gone in ["\"one\"", "\"X\"", "\"i\"", "\"p\":{\"title\"", "\"z\"", "\"c\""] {
            assert!(!canonical.contains(gone), "{gone} survived in {canonical}");
        }
        assert!(canonical.contains("kept, this is data"));
    }

    #[test]
    fn idempotent() {
        let text = r#"{"title":"a","properties":{"b":{"description":"c","minLength":1}}}"#;
        let once = strip_annotations(&SchemaNode::parse(text).unwrap());
        assert_eq!(strip_annotations(&once), once);
    }
}
