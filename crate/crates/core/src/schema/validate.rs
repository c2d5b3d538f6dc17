use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::traverse::resolve_reference;
use super::{JsonType, SchemaError, SchemaNode};
use crate::json::{json_equal, number_to_decimal, to_canonical_string};
use crate::pointer::Pointer;

/// Keywords that can produce violations. `false` is the boolean schema.
pub const VALIDATED_KEYWORDS: [&str; 14] = [
    "type",
    "properties",
    "required",
    "additionalProperties",
    "items",
    "minItems",
    "maxItems",
    "uniqueItems",
    "minLength",
    "maxLength",
    "minimum",
    "maximum",
    "enum",
    "false",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Location in the instance.
    pub location: Pointer,
    pub keyword: String,
    pub message: String,
}

/// Checks `instance` against `schema`. References are resolved against
/// `schema` itself; `format` and unknown keywords never fail.
pub fn validate(schema: &SchemaNode, instance: &Value) -> Result<Vec<Violation>, SchemaError> {
    let mut validator = Validator { root: schema, active: Vec::new(), out: Vec::new() };
    validator.check(schema, instance, &Pointer::root())?;
    Ok(validator.out)
}

struct Validator<'a> {
    root: &'a SchemaNode,
    /// (reference, instance location) pairs currently being expanded.
    active: Vec<(&'a str, Pointer)>,
    out: Vec<Violation>,
}

fn type_matches(ty: JsonType, actual: JsonType) -> bool {
    ty == actual || (ty == JsonType::Number && actual == JsonType::Integer)
}

impl<'a> Validator<'a> {
    fn report(&mut self, location: &Pointer, keyword: &str, message: String) {
        self.out.push(Violation { location: location.clone(), keyword: keyword.to_string(), message });
    }

    fn check(&mut self, node: &'a SchemaNode, instance: &Value, at: &Pointer) -> Result<(), SchemaError> {
        if node.unsatisfiable {
            self.report(at, "false", "no value satisfies the `false` schema".into());
            return Ok(());
        }
        if let Some(reference) = node.reference.as_deref() {
            if self.active.iter().any(|(r, loc)| *r == reference && loc == at) {
                return Err(SchemaError::RefCycle { reference: reference.to_string(), location: at.clone() });
            }
            let target = resolve_reference(self.root, reference)?;
            self.active.push((reference, at.clone()));
            let result = self.check(target, instance, at);
            self.active.pop();
            result?;
        }

        let actual = JsonType::of(instance);
        if !node.types.is_empty() && !node.types.iter().any(|t| type_matches(*t, actual)) {
            let expected: Vec<&str> = node.types.iter().map(|t| t.as_str()).collect();
            self.report(at, "type", format!("expected {}, found {actual}", expected.join(" or ")));
        }
        if let Some(values) = &node.enum_values {
            if !values.iter().any(|v| json_equal(v, instance)) {
                self.report(at, "enum", "value is not one of the enumerated values".into());
            }
        }

        match instance {
            Value::String(s) => {
                let len = s.chars().count() as u64;
                if let Some(min) = node.min_length.filter(|m| len < *m) {
                    self.report(at, "minLength", format!("length {len} is below minLength {min}"));
                }
                if let Some(max) = node.max_length.filter(|m| len > *m) {
                    self.report(at, "maxLength", format!("length {len} exceeds maxLength {max}"));
                }
            }
            Value::Number(n) => {
                let value = number_to_decimal(n);
                if let Some(min) = node.minimum.as_ref().filter(|m| &value < *m) {
                    self.report(at, "minimum", format!("{value} is below minimum {min}"));
                }
                if let Some(max) = node.maximum.as_ref().filter(|m| &value > *m) {
                    self.report(at, "maximum", format!("{value} exceeds maximum {max}"));
                }
            }
            Value::Array(elements) => {
                let len = elements.len() as u64;
                if let Some(min) = node.min_items.filter(|m| len < *m) {
                    self.report(at, "minItems", format!("{len} items is below minItems {min}"));
                }
                if let Some(max) = node.max_items.filter(|m| len > *m) {
                    self.report(at, "maxItems", format!("{len} items exceeds maxItems {max}"));
                }
                if node.unique_items == Some(true) {
                    let mut seen = HashSet::new();
                    if !elements.iter().all(|e| seen.insert(to_canonical_string(e))) {
                        self.report(at, "uniqueItems", "array items are not unique".into());
                    }
                }
                if let Some(items) = &node.items {
                    for (i, element) in elements.iter().enumerate() {
                        self.check(items, element, &at.child(i.to_string()))?;
                    }
                }
            }
            Value::Object(members) => {
                for name in &node.required {
                    if !members.contains_key(name) {
                        self.report(at, "required", format!("missing required property `{name}`"));
                    }
                }
                for (name, value) in members {
                    match node.properties.get(name) {
                        Some(sub) => self.check(sub, value, &at.child(name.as_str()))?,
                        None if node.additional_properties == Some(false) => self.report(
                            &at.child(name.as_str()),
                            "additionalProperties",
                            format!("property `{name}` is not allowed"),
                        ),
                        None => {}
                    }
                }
            }
            Value::Null | Value::Bool(_) => {}
        }
        Ok(())
    }
}
