use super::{SchemaError, SchemaNode};
use crate::pointer::Pointer;

/// Pre-order traversal: the node itself, then its properties (in key
/// order), its `items`, and its definitions.
pub fn walk(node: &SchemaNode) -> Vec<(Pointer, &SchemaNode)> {
    let mut out = Vec::new();
    walk_into(node, Pointer::root(), &mut out);
    out
}

fn walk_into<'a>(node: &'a SchemaNode, at: Pointer, out: &mut Vec<(Pointer, &'a SchemaNode)>) {
    out.push((at.clone(), node));
    for (name, sub) in &node.properties {
        walk_into(sub, at.child("properties").child(name.as_str()), out);
    }
    if let Some(items) = &node.items {
        walk_into(items, at.child("items"), out);
    }
    for (name, sub) in &node.definitions {
        walk_into(sub, at.child("definitions").child(name.as_str()), out);
    }
}

/// Follows `ptr` from `node` through `properties/<name>`, `items` and
/// `definitions/<name>` steps.
pub fn resolve<'a>(node: &'a SchemaNode, ptr: &Pointer) -> Result<&'a SchemaNode, SchemaError> {
    let unresolvable = || SchemaError::Unresolvable { pointer: ptr.to_string() };
    let mut current = node;
    let mut segments = ptr.segments().iter();
    while let Some(step) = segments.next() {
        current = match step.as_str() {
            "items" => current.items.as_deref().ok_or_else(unresolvable)?,
            "properties" => {
                let name = segments.next().ok_or_else(unresolvable)?;
                current.properties.get(name).ok_or_else(unresolvable)?
            }
            "definitions" => {
                let name = segments.next().ok_or_else(unresolvable)?;
                current.definitions.get(name).ok_or_else(unresolvable)?
            }
            _ => return Err(unresolvable()),
        };
    }
    Ok(current)
}

/// Mutable counterpart of [`resolve`].
pub fn resolve_mut<'a>(node: &'a mut SchemaNode, ptr: &Pointer) -> Result<&'a mut SchemaNode, SchemaError> {
    let unresolvable = || SchemaError::Unresolvable { pointer: ptr.to_string() };
    let mut current = node;
    let mut segments = ptr.segments().iter();
    while let Some(step) = segments.next() {
        current = match step.as_str() {
            "items" => current.items.as_deref_mut().ok_or_else(unresolvable)?,
            "properties" => {
                let name = segments.next().ok_or_else(unresolvable)?;
                current.properties.get_mut(name).ok_or_else(unresolvable)?
            }
            "definitions" => {
                let name = segments.next().ok_or_else(unresolvable)?;
                current.definitions.get_mut(name).ok_or_else(unresolvable)?
            }
            _ => return Err(unresolvable()),
        };
    }
    Ok(current)
}

/// Resolves a local `$ref` string such as `#/definitions/point` against
/// the document root.
pub fn resolve_reference<'a>(root: &'a SchemaNode, reference: &str) -> Result<&'a SchemaNode, SchemaError> {
    let ptr =
        Pointer::from_fragment(reference).map_err(|_| SchemaError::Unresolvable { pointer: reference.to_string() })?;
    resolve(root, &ptr).map_err(|_| SchemaError::Unresolvable { pointer: reference.to_string() })
}
