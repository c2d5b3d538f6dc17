use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use bigdecimal::{BigDecimal, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use super::SchemaError;
use crate::json::{decimal_to_value, is_integral, json_equal, number_to_decimal, parse_json, to_canonical_string};
use crate::pointer::Pointer;

/// JSON Schema primitive type names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JsonType {
    Array,
    Boolean,
    Integer,
    Null,
    Number,
    Object,
    String,
}

impl JsonType {
    pub const ALL: [JsonType; 7] = [
        JsonType::Array,
        JsonType::Boolean,
        JsonType::Integer,
        JsonType::Null,
        JsonType::Number,
        JsonType::Object,
        JsonType::String,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            JsonType::Array => "array",
            JsonType::Boolean => "boolean",
            JsonType::Integer => "integer",
            JsonType::Null => "null",
            JsonType::Number => "number",
            JsonType::Object => "object",
            JsonType::String => "string",
        }
    }

    /// Type of a JSON value; integral numbers report `Integer`.
    pub fn of(value: &Value) -> JsonType {
        match value {
            Value::Null => JsonType::Null,
            Value::Bool(_) => JsonType::Boolean,
            Value::Number(n) if is_integral(&number_to_decimal(n)) => JsonType::Integer,
            Value::Number(_) => JsonType::Number,
            Value::String(_) => JsonType::String,
            Value::Array(_) => JsonType::Array,
            Value::Object(_) => JsonType::Object,
        }
    }
}

impl fmt::Display for JsonType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for JsonType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        JsonType::ALL.into_iter().find(|t| t.as_str() == s).ok_or(())
    }
}

/// Human-readable annotation keywords.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Annotation {
    Title,
    Description,
    Comment,
}

impl Annotation {
    pub const ALL: [Annotation; 3] = [Annotation::Title, Annotation::Description, Annotation::Comment];

    pub fn keyword(self) -> &'static str {
        match self {
            Annotation::Title => "title",
            Annotation::Description => "description",
            Annotation::Comment => "$comment",
        }
    }

    pub fn from_keyword(keyword: &str) -> Option<Self> {
        Annotation::ALL.into_iter().find(|a| a.keyword() == keyword)
    }
}

/// A JSON Schema restricted to the keywords this crate understands.
/// Everything else is kept verbatim in `unknown`.
///
/// Equality agrees with equality of the canonical serialization.
#[derive(Debug, Clone, Default)]
pub struct SchemaNode {
    /// Set for the boolean schema `false`; all other fields are then empty.
    pub unsatisfiable: bool,
    pub types: BTreeSet<JsonType>,
    pub properties: BTreeMap<String, SchemaNode>,
    pub required: BTreeSet<String>,
    /// `None` is permissive, as is `Some(true)`.
    pub additional_properties: Option<bool>,
    pub items: Option<Box<SchemaNode>>,
    pub min_items: Option<u64>,
    pub max_items: Option<u64>,
    pub min_length: Option<u64>,
    pub max_length: Option<u64>,
    pub minimum: Option<BigDecimal>,
    pub maximum: Option<BigDecimal>,
    pub unique_items: Option<bool>,
    pub format: Option<String>,
    pub enum_values: Option<Vec<Value>>,
    pub reference: Option<String>,
    pub definitions: BTreeMap<String, SchemaNode>,
    pub annotations: BTreeMap<Annotation, String>,
    pub unknown: BTreeMap<String, Value>,
}

fn values_equal(a: &Option<Vec<Value>>, b: &Option<Vec<Value>>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| json_equal(p, q)),
        (None, None) => true,
        _ => false,
    }
}

impl PartialEq for SchemaNode {
    fn eq(&self, other: &Self) -> bool {
        if self.unsatisfiable || other.unsatisfiable {
            return self.unsatisfiable == other.unsatisfiable;
        }
        self.types == other.types
            && self.required == other.required
            && self.additional_properties == other.additional_properties
            && (self.min_items, self.max_items, self.min_length, self.max_length)
                == (other.min_items, other.max_items, other.min_length, other.max_length)
            && self.minimum == other.minimum
            && self.maximum == other.maximum
            && self.unique_items == other.unique_items
            && self.format == other.format
            && self.reference == other.reference
            && self.annotations == other.annotations
            && values_equal(&self.enum_values, &other.enum_values)
            && self.unknown.len() == other.unknown.len()
            && self.unknown.iter().all(|(k, v)| other.unknown.get(k).is_some_and(|w| json_equal(v, w)))
            && self.items == other.items
            && self.properties == other.properties
            && self.definitions == other.definitions
    }
}

impl SchemaNode {
    /// The boolean schema `false`.
    pub fn unsatisfiable() -> Self {
        Self { unsatisfiable: true, ..Self::default() }
    }

    pub fn of_type(ty: JsonType) -> Self {
        Self { types: BTreeSet::from([ty]), ..Self::default() }
    }

    pub fn reference_to(target: impl Into<String>) -> Self {
        Self { reference: Some(target.into()), ..Self::default() }
    }

    pub fn description(&self) -> Option<&str> {
        self.annotations.get(&Annotation::Description).map(String::as_str)
    }

    pub fn has_type(&self, ty: JsonType) -> bool {
        self.types.contains(&ty)
    }

    pub fn is_object_shaped(&self) -> bool {
        self.has_type(JsonType::Object) && !self.properties.is_empty()
    }

    /// Parses schema text; the root must be an object or a boolean.
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let value = parse_json(text).map_err(|e| SchemaError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self, SchemaError> {
        parse_node(value, &Pointer::root())
    }

    pub fn to_value(&self) -> Value {
        if self.unsatisfiable {
            return Value::Bool(false);
        }
        let mut map = Map::new();
        for (annotation, text) in &self.annotations {
            map.insert(annotation.keyword().to_string(), Value::String(text.clone()));
        }
        if let Some(r) = &self.reference {
            map.insert("$ref".into(), Value::String(r.clone()));
        }
        match self.types.len() {
            0 => {}
            1 => {
                let ty = self.types.iter().next().unwrap();
                map.insert("type".into(), Value::String(ty.as_str().into()));
            }
            _ => {
                let names = self.types.iter().map(|t| Value::String(t.as_str().into())).collect();
                map.insert("type".into(), Value::Array(names));
            }
        }
        if !self.properties.is_empty() {
            let props = self.properties.iter().map(|(k, v)| (k.clone(), v.to_value())).collect();
            map.insert("properties".into(), Value::Object(props));
        }
        if !self.required.is_empty() {
            let names = self.required.iter().map(|k| Value::String(k.clone())).collect();
            map.insert("required".into(), Value::Array(names));
        }
        if let Some(flag) = self.additional_properties {
            map.insert("additionalProperties".into(), Value::Bool(flag));
        }
        if let Some(items) = &self.items {
            map.insert("items".into(), items.to_value());
        }
        let counts = [
            ("minItems", self.min_items),
            ("maxItems", self.max_items),
            ("minLength", self.min_length),
            ("maxLength", self.max_length),
        ];
        for (keyword, count) in counts {
            if let Some(n) = count {
                map.insert(keyword.into(), Value::from(n));
            }
        }
        if let Some(d) = &self.minimum {
            map.insert("minimum".into(), decimal_to_value(d));
        }
        if let Some(d) = &self.maximum {
            map.insert("maximum".into(), decimal_to_value(d));
        }
        if let Some(flag) = self.unique_items {
            map.insert("uniqueItems".into(), Value::Bool(flag));
        }
        if let Some(format) = &self.format {
            map.insert("format".into(), Value::String(format.clone()));
        }
        if let Some(values) = &self.enum_values {
            map.insert("enum".into(), Value::Array(values.clone()));
        }
        if !self.definitions.is_empty() {
            let defs = self.definitions.iter().map(|(k, v)| (k.clone(), v.to_value())).collect();
            map.insert("definitions".into(), Value::Object(defs));
        }
        for (keyword, value) in &self.unknown {
            map.entry(keyword.clone()).or_insert_with(|| value.clone());
        }
        Value::Object(map)
    }

    /// Canonical text: sorted keys, no whitespace, normalized numbers.
    pub fn to_canonical(&self) -> String {
        to_canonical_string(&self.to_value())
    }
}

impl fmt::Display for SchemaNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical())
    }
}

impl Serialize for SchemaNode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SchemaNode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        SchemaNode::from_value(&value).map_err(serde::de::Error::custom)
    }
}

fn mismatch(at: &Pointer, keyword: &str, expected: &'static str) -> SchemaError {
    SchemaError::KeywordType { pointer: at.clone(), keyword: keyword.to_string(), expected }
}

fn parse_count(value: &Value, at: &Pointer, keyword: &str) -> Result<u64, SchemaError> {
    let err = || mismatch(at, keyword, "a non-negative integer");
    let Value::Number(n) = value else { return Err(err()) };
    let d = number_to_decimal(n);
    if !is_integral(&d) || d < 0 {
        return Err(err());
    }
    d.to_u64().ok_or_else(err)
}

fn parse_schema_map(value: &Value, at: &Pointer, keyword: &str) -> Result<BTreeMap<String, SchemaNode>, SchemaError> {
    let Value::Object(map) = value else {
        return Err(mismatch(at, keyword, "an object of schemas"));
    };
    let here = at.child(keyword);
    map.iter().map(|(name, sub)| Ok((name.clone(), parse_node(sub, &here.child(name.as_str()))?))).collect()
}

fn parse_node(value: &Value, at: &Pointer) -> Result<SchemaNode, SchemaError> {
    let map = match value {
        Value::Bool(true) => return Ok(SchemaNode::default()),
        Value::Bool(false) => return Ok(SchemaNode::unsatisfiable()),
        Value::Object(map) => map,
        _ => return Err(SchemaError::NotASchema { pointer: at.clone() }),
    };
    let mut node = SchemaNode::default();
    for (keyword, v) in map {
        let kw = keyword.as_str();
        match kw {
            "type" => {
                let names: Vec<&Value> = match v {
                    Value::String(_) => vec![v],
                    Value::Array(items) => items.iter().collect(),
                    _ => return Err(mismatch(at, kw, "a type name or array of type names")),
                };
                for name in names {
                    let ty = name
                        .as_str()
                        .and_then(|s| s.parse::<JsonType>().ok())
                        .ok_or_else(|| mismatch(at, kw, "a known type name"))?;
                    node.types.insert(ty);
                }
            }
            "properties" => node.properties = parse_schema_map(v, at, kw)?,
            "definitions" => node.definitions = parse_schema_map(v, at, kw)?,
            // Older drafts spell `required` as a per-property boolean; that
            // form rides along opaquely.
            "required" => match v {
                Value::Array(names) => {
                    for name in names {
                        let name = name.as_str().ok_or_else(|| mismatch(at, kw, "an array of strings"))?;
                        node.required.insert(name.to_string());
                    }
                }
                Value::Bool(_) => {
                    node.unknown.insert(keyword.clone(), v.clone());
                }
                _ => return Err(mismatch(at, kw, "an array of strings")),
            },
            "additionalProperties" => match v {
                Value::Bool(flag) => node.additional_properties = Some(*flag),
                Value::Object(_) => {
                    node.unknown.insert(keyword.clone(), v.clone());
                }
                _ => return Err(mismatch(at, kw, "a boolean or schema")),
            },
            "items" => match v {
                Value::Bool(_) | Value::Object(_) => {
                    node.items = Some(Box::new(parse_node(v, &at.child("items"))?));
                }
                Value::Array(_) => {
                    node.unknown.insert(keyword.clone(), v.clone());
                }
                _ => return Err(mismatch(at, kw, "a schema")),
            },
            "minItems" => node.min_items = Some(parse_count(v, at, kw)?),
            "maxItems" => node.max_items = Some(parse_count(v, at, kw)?),
            "minLength" => node.min_length = Some(parse_count(v, at, kw)?),
            "maxLength" => node.max_length = Some(parse_count(v, at, kw)?),
            "minimum" | "maximum" => {
                let Value::Number(n) = v else { return Err(mismatch(at, kw, "a number")) };
                let d = number_to_decimal(n);
                if kw == "minimum" {
                    node.minimum = Some(d);
                } else {
                    node.maximum = Some(d);
                }
            }
            "uniqueItems" => {
                node.unique_items = Some(v.as_bool().ok_or_else(|| mismatch(at, kw, "a boolean"))?);
            }
            "format" => {
                node.format = Some(v.as_str().ok_or_else(|| mismatch(at, kw, "a string"))?.to_string());
            }
            "enum" => {
                let values = v.as_array().ok_or_else(|| mismatch(at, kw, "an array"))?;
                node.enum_values = Some(values.clone());
            }
            "$ref" => {
                node.reference = Some(v.as_str().ok_or_else(|| mismatch(at, kw, "a string"))?.to_string());
            }
            _ => {
                if let Some(annotation) = Annotation::from_keyword(kw) {
                    let text = v.as_str().ok_or_else(|| mismatch(at, kw, "a string"))?;
                    node.annotations.insert(annotation, text.to_string());
                } else {
                    node.unknown.insert(keyword.clone(), v.clone());
                }
            }
        }
    }
    check_bounds(&node, at)?;
    Ok(node)
}

fn check_bounds(node: &SchemaNode, at: &Pointer) -> Result<(), SchemaError> {
    let conflict = |a: &str, b: &str| SchemaError::KeywordConflict {
        pointer: at.clone(),
        message: format!("`{a}` exceeds `{b}`"),
    };
    if let (Some(lo), Some(hi)) = (node.min_length, node.max_length) {
        if lo > hi {
            return Err(conflict("minLength", "maxLength"));
        }
    }
    if let (Some(lo), Some(hi)) = (node.min_items, node.max_items) {
        if lo > hi {
            return Err(conflict("minItems", "maxItems"));
        }
    }
    if let (Some(lo), Some(hi)) = (&node.minimum, &node.maximum) {
        if lo > hi {
            return Err(conflict("minimum", "maximum"));
        }
    }
    Ok(())
}
