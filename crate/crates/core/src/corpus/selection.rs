//! Property-selection vocabulary, context snippets, and positive/negative
//! example generation from a manual schema and its discovered counterpart.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{Map, Value};

use super::PropertySelectionExample;
use crate::discovery::DiscoveredSchema;
use crate::json::{decimal_to_value, to_canonical_string};
use crate::pointer::Pointer;
use crate::schema::{resolve_reference, walk, SchemaNode};

/// Constraint keywords the selection task decides on.
pub const SELECTION_KEYWORDS: [&str; 10] = [
    "minLength",
    "maxLength",
    "minItems",
    "maxItems",
    "minimum",
    "maximum",
    "uniqueItems",
    "format",
    "enum",
    "required",
];

/// Value of a per-node selection keyword. `required` is not a per-node
/// keyword and always yields `None` here.
pub fn keyword_value(node: &SchemaNode, keyword: &str) -> Option<Value> {
    match keyword {
        "minLength" => node.min_length.map(Value::from),
        "maxLength" => node.max_length.map(Value::from),
        "minItems" => node.min_items.map(Value::from),
        "maxItems" => node.max_items.map(Value::from),
        "minimum" => node.minimum.as_ref().map(decimal_to_value),
        "maximum" => node.maximum.as_ref().map(decimal_to_value),
        "uniqueItems" => node.unique_items.map(Value::Bool),
        "format" => node.format.clone().map(Value::String),
        "enum" => node.enum_values.clone().map(Value::Array),
        _ => None,
    }
}

/// Deletes a per-node selection keyword; returns whether it was present.
pub fn remove_keyword(node: &mut SchemaNode, keyword: &str) -> bool {
    match keyword {
        "minLength" => node.min_length.take().is_some(),
        "maxLength" => node.max_length.take().is_some(),
        "minItems" => node.min_items.take().is_some(),
        "maxItems" => node.max_items.take().is_some(),
        "minimum" => node.minimum.take().is_some(),
        "maximum" => node.maximum.take().is_some(),
        "uniqueItems" => node.unique_items.take().is_some(),
        "format" => node.format.take().is_some(),
        "enum" => node.enum_values.take().is_some(),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Step {
    Property(String),
    Definition(String),
    Items,
}

fn steps(ptr: &Pointer) -> Vec<Step> {
    let mut out = Vec::new();
    let mut segments = ptr.segments().iter();
    while let Some(segment) = segments.next() {
        match segment.as_str() {
            "properties" => out.extend(segments.next().map(|n| Step::Property(n.clone()))),
            "definitions" => out.extend(segments.next().map(|n| Step::Definition(n.clone()))),
            "items" => out.push(Step::Items),
            _ => {}
        }
    }
    out
}

/// Name of the property a schema pointer ends in, if its last step is a
/// property.
pub fn property_name(ptr: &Pointer) -> Option<String> {
    match steps(ptr).pop() {
        Some(Step::Property(name)) => Some(name),
        _ => None,
    }
}

/// Single-keyword context: the nearest enclosing property name, any
/// `items` steps below it, then `keyword: value`. Canonical text.
pub fn context_snippet(location: &Pointer, keyword: &str, value: &Value) -> String {
    let path = steps(location);
    let last_property = path.iter().rposition(|s| matches!(s, Step::Property(_)));
    let tail_start = last_property.map_or(0, |i| i + 1);
    let mut inner = Map::new();
    inner.insert(keyword.to_string(), value.clone());
    let mut inner = Value::Object(inner);
    for step in path[tail_start..].iter().rev() {
        if *step == Step::Items {
            let mut wrap = Map::new();
            wrap.insert("items".into(), inner);
            inner = Value::Object(wrap);
        }
    }
    if let Some(Step::Property(name)) = last_property.map(|i| &path[i]) {
        let mut props = Map::new();
        props.insert(name.clone(), inner);
        let mut outer = Map::new();
        outer.insert("properties".into(), Value::Object(props));
        inner = Value::Object(outer);
    }
    to_canonical_string(&inner)
}

/// Schema nodes applying at each instance-shaped location, references
/// followed. The first node in each list is the most specific one.
#[derive(Debug)]
pub struct LocationIndex<'a> {
    pub locations: BTreeMap<Pointer, Vec<&'a SchemaNode>>,
}

const MAX_LOCATION_DEPTH: usize = 24;

impl<'a> LocationIndex<'a> {
    pub fn build(root: &'a SchemaNode) -> Self {
        let mut index = LocationIndex { locations: BTreeMap::new() };
        let chain = expand(root, root, &mut Vec::new());
        index.visit(root, chain, Pointer::root(), &mut Vec::new());
        index
    }

    fn visit(&mut self, root: &'a SchemaNode, chain: Vec<&'a SchemaNode>, at: Pointer, refs: &mut Vec<&'a str>) {
        if self.locations.contains_key(&at) {
            return;
        }
        let depth = at.len();
        let own_refs: Vec<&'a str> = chain.iter().filter_map(|n| n.reference.as_deref()).collect();
        let pushed = own_refs.len();
        refs.extend(own_refs);
        self.locations.insert(at.clone(), chain.clone());
        if depth < MAX_LOCATION_DEPTH {
            let names: BTreeSet<&'a String> = chain.iter().flat_map(|n| n.properties.keys()).collect();
            for name in names {
                let mut child = Vec::new();
                for sub in chain.iter().filter_map(|n| n.properties.get(name)) {
                    child.extend(expand(root, sub, refs));
                }
                self.visit(root, child, at.child("properties").child(name.as_str()), refs);
            }
            let mut items = Vec::new();
            for sub in chain.iter().filter_map(|n| n.items.as_deref()) {
                items.extend(expand(root, sub, refs));
            }
            if !items.is_empty() {
                self.visit(root, items, at.child("items"), refs);
            }
        }
        refs.truncate(refs.len() - pushed);
    }

    pub fn get(&self, at: &Pointer) -> Option<&[&'a SchemaNode]> {
        self.locations.get(at).map(Vec::as_slice)
    }

    /// Value of `keyword` at `at`; `required` reports `true` when the
    /// enclosing object requires this property.
    pub fn value_at(&self, at: &Pointer, keyword: &str) -> Option<Value> {
        if keyword == "required" {
            let name = property_name(at)?;
            let parent = at.parent()?.parent()?;
            let required = self.get(&parent)?.iter().any(|n| n.required.contains(&name));
            return required.then_some(Value::Bool(true));
        }
        self.get(at)?.iter().find_map(|n| keyword_value(n, keyword))
    }
}

/// The node followed by the targets of its reference chain, stopping at
/// references already being expanded.
fn expand<'a>(root: &'a SchemaNode, node: &'a SchemaNode, active: &mut Vec<&'a str>) -> Vec<&'a SchemaNode> {
    let mut out = vec![node];
    let mut current = node;
    let mut seen: Vec<&'a str> = Vec::new();
    while let Some(reference) = current.reference.as_deref() {
        if active.contains(&reference) || seen.contains(&reference) {
            break;
        }
        let Ok(target) = resolve_reference(root, reference) else { break };
        seen.push(reference);
        out.push(target);
        current = target;
    }
    out
}

/// Selection keywords used anywhere in the schema.
pub fn keywords_in_use(schema: &SchemaNode) -> BTreeSet<&'static str> {
    let mut used = BTreeSet::new();
    for (_, node) in walk(schema) {
        for keyword in SELECTION_KEYWORDS {
            let present =
                if keyword == "required" { !node.required.is_empty() } else { keyword_value(node, keyword).is_some() };
            if present {
                used.insert(keyword);
            }
        }
    }
    used
}

/// Positive examples for keywords the manual schema uses at a location;
/// negatives for keywords the manual author uses elsewhere but omitted
/// here while discovery produced them. Locations are aligned by identical
/// property-name paths.
pub fn generate_property_examples(
    schema_id: &str,
    manual: &SchemaNode,
    discovered: &DiscoveredSchema,
) -> Vec<PropertySelectionExample> {
    let manual_index = LocationIndex::build(manual);
    let discovered_index = LocationIndex::build(&discovered.root);
    let in_use = keywords_in_use(manual);
    let aligned: Vec<&Pointer> =
        manual_index.locations.keys().filter(|p| discovered_index.locations.contains_key(*p)).collect();
    if aligned.is_empty() {
        log::warn!("{schema_id}: no locations shared between manual and discovered schema");
        return Vec::new();
    }

    let mut out = Vec::new();
    for location in aligned {
        for keyword in SELECTION_KEYWORDS {
            let (value, label) = match manual_index.value_at(location, keyword) {
                Some(v) => (v, true),
                None if in_use.contains(keyword) => match discovered_index.value_at(location, keyword) {
                    Some(v) => (v, false),
                    None => continue,
                },
                None => continue,
            };
            out.push(PropertySelectionExample {
                schema_id: schema_id.to_string(),
                location: location.clone(),
                keyword: keyword.to_string(),
                context_snippet: context_snippet(location, keyword, &value),
                label,
            });
        }
    }
    out
}
