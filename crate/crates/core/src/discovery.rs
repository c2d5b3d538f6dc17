//! Schema discovery from document collections.
//!
//! Each document is inferred into a tight schema (observed bounds only),
//! the per-document schemas are folded with [`merge`], and repeated object
//! shapes are then hoisted into numbered `defn<i>` definitions.
//!
//! [`merge`] is a least-upper-bound style operation: every instance valid
//! against either input is valid against the result. It is commutative,
//! associative and idempotent on schemas produced by inference and merging,
//! so folds may be reassociated freely across threads.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde_json::Value;
use thiserror::Error;

use crate::json::{canonical_cmp, is_integral, json_equal, number_to_decimal, to_canonical_string};
use crate::schema::{JsonType, SchemaNode};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiscoveryError {
    #[error("cannot discover a schema from an empty collection")]
    EmptyCollection,
}

/// Sorted property-name set identifying an object shape.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeySetSignature(Vec<String>);

impl KeySetSignature {
    /// `None` for nodes that are not objects with at least one property.
    pub fn of(node: &SchemaNode) -> Option<Self> {
        node.is_object_shaped().then(|| Self(node.properties.keys().cloned().collect()))
    }

    pub fn keys(&self) -> &[String] {
        &self.0
    }
}

/// A discovered schema with hoisted definitions stored on `root`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveredSchema {
    pub root: SchemaNode,
    /// Number of documents the schema was discovered from, when known.
    pub document_count: Option<usize>,
}

impl DiscoveredSchema {
    pub fn from_schema(root: SchemaNode) -> Self {
        Self { root, document_count: None }
    }

    /// Definitions ordered by their numeric suffix (`defn2` before `defn10`),
    /// falling back to name order for other names.
    pub fn definitions(&self) -> Vec<(&str, &SchemaNode)> {
        let mut defs: Vec<(&str, &SchemaNode)> = self.root.definitions.iter().map(|(k, v)| (k.as_str(), v)).collect();
        defs.sort_by_key(|(name, _)| (definition_index(name).unwrap_or(usize::MAX), name.to_string()));
        defs
    }

    pub fn to_canonical(&self) -> String {
        self.root.to_canonical()
    }
}

/// Placeholder definition name for index `i`.
pub fn definition_name(i: usize) -> String {
    format!("defn{i}")
}

/// Index of a `defn<i>` placeholder name.
pub fn definition_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("defn")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Infers the tightest schema describing a single document.
pub fn infer_document(doc: &Value) -> SchemaNode {
    match doc {
        Value::Null => SchemaNode::of_type(JsonType::Null),
        Value::Bool(_) => SchemaNode::of_type(JsonType::Boolean),
        Value::Number(n) => {
            let value = number_to_decimal(n);
            let ty = if is_integral(&value) { JsonType::Integer } else { JsonType::Number };
            let mut node = SchemaNode::of_type(ty);
            node.minimum = Some(value.clone());
            node.maximum = Some(value);
            node
        }
        Value::String(s) => {
            let len = s.chars().count() as u64;
            let mut node = SchemaNode::of_type(JsonType::String);
            node.min_length = Some(len);
            node.max_length = Some(len);
            node
        }
        Value::Array(elements) => {
            let mut node = SchemaNode::of_type(JsonType::Array);
            let len = elements.len() as u64;
            node.min_items = Some(len);
            node.max_items = Some(len);
            node.items = elements.iter().map(infer_document).reduce(|a, b| merge(&a, &b)).map(Box::new);
            if elements.len() >= 2 {
                let mut seen = HashSet::new();
                if elements.iter().all(|e| seen.insert(to_canonical_string(e))) {
                    node.unique_items = Some(true);
                }
            }
            node
        }
        Value::Object(members) => {
            let mut node = SchemaNode::of_type(JsonType::Object);
            for (key, value) in members {
                node.properties.insert(key.clone(), infer_document(value));
                node.required.insert(key.clone());
            }
            node.additional_properties = Some(false);
            node
        }
    }
}

#[derive(Clone, Copy)]
enum Family {
    String,
    Number,
    Array,
    Object,
}

fn has_family(node: &SchemaNode, family: Family) -> bool {
    if node.types.is_empty() {
        return true;
    }
    match family {
        Family::String => node.has_type(JsonType::String),
        Family::Number => node.has_type(JsonType::Number) || node.has_type(JsonType::Integer),
        Family::Array => node.has_type(JsonType::Array),
        Family::Object => node.has_type(JsonType::Object),
    }
}

/// Which side(s) contribute the keywords of a type family.
enum Source {
    Both,
    Left,
    Right,
}

fn family_source(a: &SchemaNode, b: &SchemaNode, family: Family) -> Source {
    match (has_family(a, family), has_family(b, family)) {
        (true, false) => Source::Left,
        (false, true) => Source::Right,
        _ => Source::Both,
    }
}

fn lower<T: Ord + Clone>(a: &Option<T>, b: &Option<T>) -> Option<T> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y).clone()),
        _ => None,
    }
}

fn upper<T: Ord + Clone>(a: &Option<T>, b: &Option<T>) -> Option<T> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y).clone()),
        _ => None,
    }
}

fn same<T: PartialEq + Clone>(a: &Option<T>, b: &Option<T>) -> Option<T> {
    if a == b {
        a.clone()
    } else {
        None
    }
}

/// Every observed array is free of duplicates: either flagged unique or
/// too short to hold a duplicate.
fn arrays_distinct(node: &SchemaNode) -> bool {
    node.unique_items == Some(true) || node.max_items.is_some_and(|m| m <= 1)
}

/// Generalizes two schemas into one accepting the instances of both.
pub fn merge(a: &SchemaNode, b: &SchemaNode) -> SchemaNode {
    if a.unsatisfiable {
        return b.clone();
    }
    if b.unsatisfiable {
        return a.clone();
    }
    let mut out = SchemaNode::default();

    if !a.types.is_empty() && !b.types.is_empty() {
        out.types = a.types.union(&b.types).copied().collect();
        if out.types.contains(&JsonType::Number) {
            out.types.remove(&JsonType::Integer);
        }
    }

    match family_source(a, b, Family::String) {
        Source::Left => (out.min_length, out.max_length) = (a.min_length, a.max_length),
        Source::Right => (out.min_length, out.max_length) = (b.min_length, b.max_length),
        Source::Both => {
            out.min_length = lower(&a.min_length, &b.min_length);
            out.max_length = upper(&a.max_length, &b.max_length);
        }
    }

    match family_source(a, b, Family::Number) {
        Source::Left => (out.minimum, out.maximum) = (a.minimum.clone(), a.maximum.clone()),
        Source::Right => (out.minimum, out.maximum) = (b.minimum.clone(), b.maximum.clone()),
        Source::Both => {
            out.minimum = lower(&a.minimum, &b.minimum);
            out.maximum = upper(&a.maximum, &b.maximum);
        }
    }

    match family_source(a, b, Family::Array) {
        Source::Left => copy_array_keywords(&mut out, a),
        Source::Right => copy_array_keywords(&mut out, b),
        Source::Both => {
            out.min_items = lower(&a.min_items, &b.min_items);
            out.max_items = upper(&a.max_items, &b.max_items);
            out.items = match (&a.items, &b.items) {
                (Some(x), Some(y)) => Some(Box::new(merge(x, y))),
                // A missing `items` only carries information when that side
                // never saw an element.
                (None, Some(y)) if a.max_items == Some(0) => Some(y.clone()),
                (Some(x), None) if b.max_items == Some(0) => Some(x.clone()),
                _ => None,
            };
            let long_enough = out.max_items.is_none_or(|m| m >= 2);
            if arrays_distinct(a) && arrays_distinct(b) && long_enough {
                out.unique_items = Some(true);
            }
        }
    }

    match family_source(a, b, Family::Object) {
        Source::Left => copy_object_keywords(&mut out, a),
        Source::Right => copy_object_keywords(&mut out, b),
        Source::Both => {
            let a_closed = a.additional_properties == Some(false);
            let b_closed = b.additional_properties == Some(false);
            for (name, sub) in &a.properties {
                match b.properties.get(name) {
                    Some(other) => {
                        out.properties.insert(name.clone(), merge(sub, other));
                    }
                    None if b_closed => {
                        out.properties.insert(name.clone(), sub.clone());
                    }
                    None => {}
                }
            }
            if a_closed {
                for (name, sub) in &b.properties {
                    if !a.properties.contains_key(name) {
                        out.properties.insert(name.clone(), sub.clone());
                    }
                }
            }
            out.required = a.required.intersection(&b.required).cloned().collect();
            if a_closed && b_closed {
                out.additional_properties = Some(false);
            }
        }
    }

    out.format = same(&a.format, &b.format);
    out.reference = same(&a.reference, &b.reference);
    out.enum_values = match (&a.enum_values, &b.enum_values) {
        (Some(x), Some(y)) => {
            let mut values: Vec<Value> = x.clone();
            for v in y {
                if !values.iter().any(|w| json_equal(v, w)) {
                    values.push(v.clone());
                }
            }
            values.sort_by(canonical_cmp);
            values.dedup_by(|p, q| json_equal(p, q));
            Some(values)
        }
        _ => None,
    };
    out.annotations =
        a.annotations.iter().filter(|(k, v)| b.annotations.get(k) == Some(v)).map(|(k, v)| (*k, v.clone())).collect();
    out.unknown = a
        .unknown
        .iter()
        .filter(|(k, v)| b.unknown.get(*k).is_some_and(|w| json_equal(v, w)))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    out.definitions = a.definitions.clone();
    for (name, def) in &b.definitions {
        let merged = match out.definitions.get(name) {
            Some(existing) => merge(existing, def),
            None => def.clone(),
        };
        out.definitions.insert(name.clone(), merged);
    }
    out
}

fn copy_array_keywords(out: &mut SchemaNode, from: &SchemaNode) {
    out.min_items = from.min_items;
    out.max_items = from.max_items;
    out.items = from.items.clone();
    out.unique_items = from.unique_items;
}

fn copy_object_keywords(out: &mut SchemaNode, from: &SchemaNode) {
    out.properties = from.properties.clone();
    out.required = from.required.clone();
    out.additional_properties = from.additional_properties;
}

/// Infers every document and folds the results with [`merge`].
pub fn discover(docs: &[Value]) -> Result<SchemaNode, DiscoveryError> {
    docs.par_iter().map(infer_document).reduce_with(|a, b| merge(&a, &b)).ok_or(DiscoveryError::EmptyCollection)
}

/// Hoists object shapes whose key set repeats at least `min_count` times
/// (the root itself excluded) into `defn<i>` definitions, numbered by first
/// occurrence in pre-order.
///
/// Each definition is the merge of its occurrences. An occurrence becomes a
/// `$ref` plus whatever of its own keywords are stricter than the merged
/// definition, so validation outcomes are unchanged.
pub fn hoist_definitions(root: &SchemaNode, min_count: usize) -> DiscoveredSchema {
    let min_count = min_count.max(1);
    let mut order: Vec<KeySetSignature> = Vec::new();
    let mut occurrences: HashMap<KeySetSignature, Vec<&SchemaNode>> = HashMap::new();
    collect_children(root, &mut |node| {
        if node.reference.is_some() {
            return;
        }
        if let Some(sig) = KeySetSignature::of(node) {
            let entry = occurrences.entry(sig.clone()).or_default();
            if entry.is_empty() {
                order.push(sig);
            }
            entry.push(node);
        }
    });

    let mut hoisted: HashMap<KeySetSignature, (String, SchemaNode)> = HashMap::new();
    for sig in order.iter().filter(|s| occurrences[*s].len() >= min_count) {
        let merged = occurrences[sig].iter().skip(1).fold(occurrences[sig][0].clone(), |acc, n| merge(&acc, n));
        hoisted.insert(sig.clone(), (definition_name(hoisted.len()), merged));
    }

    let rewriter = Hoister { hoisted: &hoisted };
    let mut out = rewriter.rewrite_children(root);
    for (name, def) in hoisted.values() {
        out.definitions.insert(name.clone(), rewriter.rewrite_children(def));
    }
    DiscoveredSchema { root: out, document_count: None }
}

/// Discovers and hoists in one step.
pub fn discover_schema(docs: &[Value], min_count: usize) -> Result<DiscoveredSchema, DiscoveryError> {
    let root = discover(docs)?;
    let mut discovered = hoist_definitions(&root, min_count);
    discovered.document_count = Some(docs.len());
    Ok(discovered)
}

fn collect_children<'a>(node: &'a SchemaNode, visit: &mut impl FnMut(&'a SchemaNode)) {
    for sub in node.properties.values() {
        visit(sub);
        collect_children(sub, visit);
    }
    if let Some(items) = &node.items {
        visit(items);
        collect_children(items, visit);
    }
    for sub in node.definitions.values() {
        visit(sub);
        collect_children(sub, visit);
    }
}

struct Hoister<'a> {
    hoisted: &'a HashMap<KeySetSignature, (String, SchemaNode)>,
}

impl Hoister<'_> {
    fn rewrite(&self, node: &SchemaNode) -> SchemaNode {
        if node.reference.is_none() {
            // Nodes inside merged definitions can be wider than the shared
            // shape; those stay inline.
            let subsumed = |def: &SchemaNode| merge(def, node) == *def;
            if let Some((name, def)) =
                KeySetSignature::of(node).and_then(|s| self.hoisted.get(&s)).filter(|(_, d)| subsumed(d))
            {
                let mut replaced = self.rewrite_children(&residual(node, def));
                replaced.reference = Some(format!("#/definitions/{name}"));
                return replaced;
            }
        }
        self.rewrite_children(node)
    }

    fn rewrite_children(&self, node: &SchemaNode) -> SchemaNode {
        let mut out = node.clone();
        for sub in out.properties.values_mut() {
            *sub = self.rewrite(sub);
        }
        if let Some(items) = out.items.as_mut() {
            **items = self.rewrite(items);
        }
        for sub in out.definitions.values_mut() {
            *sub = self.rewrite(sub);
        }
        out
    }
}

fn keep_if_different<T: PartialEq + Clone>(own: &Option<T>, shared: &Option<T>) -> Option<T> {
    if own != shared {
        own.clone()
    } else {
        None
    }
}

/// Keywords of `own` not already implied by the (weaker) `shared` schema.
/// `shared ∧ residual` accepts exactly what `own` accepts.
fn residual(own: &SchemaNode, shared: &SchemaNode) -> SchemaNode {
    let mut out = SchemaNode::default();
    if own.types != shared.types {
        out.types = own.types.clone();
    }
    if own.required != shared.required {
        out.required = own.required.clone();
    }
    out.additional_properties = keep_if_different(&own.additional_properties, &shared.additional_properties);
    for (name, sub) in &own.properties {
        if shared.properties.get(name) != Some(sub) {
            out.properties.insert(name.clone(), sub.clone());
        }
    }
    if out.additional_properties == Some(false) {
        for name in own.properties.keys() {
            out.properties.entry(name.clone()).or_default();
        }
    }
    out.items = keep_if_different(&own.items, &shared.items);
    out.min_items = keep_if_different(&own.min_items, &shared.min_items);
    out.max_items = keep_if_different(&own.max_items, &shared.max_items);
    out.min_length = keep_if_different(&own.min_length, &shared.min_length);
    out.max_length = keep_if_different(&own.max_length, &shared.max_length);
    out.minimum = keep_if_different(&own.minimum, &shared.minimum);
    out.maximum = keep_if_different(&own.maximum, &shared.maximum);
    out.unique_items = keep_if_different(&own.unique_items, &shared.unique_items);
    out.format = keep_if_different(&own.format, &shared.format);
    out.enum_values = match (&own.enum_values, &shared.enum_values) {
        (Some(x), Some(y)) if x.len() == y.len() && x.iter().zip(y).all(|(p, q)| json_equal(p, q)) => None,
        (own_values, _) => own_values.clone(),
    };
    out.annotations = own
        .annotations
        .iter()
        .filter(|(k, v)| shared.annotations.get(k) != Some(v))
        .map(|(k, v)| (*k, v.clone()))
        .collect();
    out.unknown = own
        .unknown
        .iter()
        .filter(|(k, v)| !shared.unknown.get(*k).is_some_and(|w| json_equal(v, w)))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect::<BTreeMap<_, _>>();
    out
}

/// Keywords a discovered schema may contain.
pub const DISCOVERY_KEYWORDS: [&str; 15] = [
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
    "$ref",
    "definitions",
    "enum",
];

/// All keyword names used anywhere in `node` (property names excluded).
pub fn keywords_used(node: &SchemaNode) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (_, sub) in crate::schema::walk(node) {
        if let Value::Object(map) = sub.to_value() {
            out.extend(map.keys().cloned());
        }
    }
    out
}
