//! Property values stored on instances and passed through ability bodies.
//!
//! Values are deliberately small: scalars, ordered lists, string-keyed maps
//! (kept sorted for deterministic rendering), instance references, and null.
//! A reference is just an id — liveness is validated at each dereference, so
//! deleting an instance may leave dangling references behind, which is legal.

use crate::archetype::ValueKind;
use crate::graph::InstanceId;
use std::collections::BTreeMap;

/// A runtime property value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    List(Vec<Value>),
    Map(BTreeMap<String, Value>),
    Ref(InstanceId),
}

impl Value {
    /// The declared kind this value satisfies, or `None` for null (which only
    /// satisfies `ref` fields).
    pub fn kind(&self) -> Option<ValueKind> {
        match self {
            Value::Null => None,
            Value::Int(_) => Some(ValueKind::Int),
            Value::Float(_) => Some(ValueKind::Float),
            Value::Str(_) => Some(ValueKind::Str),
            Value::Bool(_) => Some(ValueKind::Bool),
            Value::List(_) => Some(ValueKind::List),
            Value::Map(_) => Some(ValueKind::Map),
            Value::Ref(_) => Some(ValueKind::Ref),
        }
    }

    /// Whether this value may be stored in a field of the given kind.
    /// Null is the absent reference, so it conforms to `ref` only.
    pub fn conforms(&self, kind: ValueKind) -> bool {
        match self {
            Value::Null => kind == ValueKind::Ref,
            other => other.kind() == Some(kind),
        }
    }

    /// Kind name used in mismatch diagnostics (`null` for null).
    pub fn kind_name(&self) -> &'static str {
        match self.kind() {
            Some(k) => k.name(),
            None => "null",
        }
    }

    /// The default value for a field kind with no explicit default.
    pub fn default_for(kind: ValueKind) -> Value {
        match kind {
            ValueKind::Int => Value::Int(0),
            ValueKind::Float => Value::Float(0.0),
            ValueKind::Str => Value::Str(String::new()),
            ValueKind::Bool => Value::Bool(false),
            ValueKind::List => Value::List(Vec::new()),
            ValueKind::Map => Value::Map(BTreeMap::new()),
            ValueKind::Ref => Value::Null,
        }
    }

    /// Truthiness is only defined for booleans; everything else is a type
    /// error at the call site, so this returns `None` rather than guessing.
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Compact single-line rendering used by snapshots and traces.
    ///
    /// Floats go through `{:?}` so integral floats keep their `.0` and the
    /// output is shortest-roundtrip deterministic; strings are escaped the
    /// same way. References render as `@id` without chasing the instance.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        use std::fmt::Write;
        match self {
            Value::Null => out.push_str("null"),
            Value::Int(n) => {
                let _ = write!(out, "{n}");
            }
            Value::Float(x) => {
                let _ = write!(out, "{x:?}");
            }
            Value::Str(s) => {
                let _ = write!(out, "{s:?}");
            }
            Value::Bool(b) => {
                let _ = write!(out, "{b}");
            }
            Value::List(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.render_into(out);
                }
                out.push(']');
            }
            Value::Map(entries) => {
                out.push('{');
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "{k}=");
                    v.render_into(out);
                }
                out.push('}');
            }
            Value::Ref(id) => {
                let _ = write!(out, "@{id}");
            }
        }
    }
}
