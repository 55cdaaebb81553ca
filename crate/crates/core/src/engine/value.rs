use std::fmt;

use crate::dsl::Atom;
use crate::number::{format_float, Number};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactId(pub u64);

impl fmt::Display for FactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f-{}", self.0)
    }
}

/// Runtime value. Booleans are the symbols `TRUE` and `FALSE`.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Symbol(String),
    String(String),
    Integer(i64),
    Float(f64),
    Fact(FactId),
    /// Contents of a template slot that was never assigned.
    Nil,
    /// Returned by `read` once its router is exhausted.
    Eof,
}

pub const TRUE: &str = "TRUE";
pub const FALSE: &str = "FALSE";

impl Value {
    pub fn symbol(s: impl Into<String>) -> Self {
        Value::Symbol(s.into())
    }

    pub fn boolean(b: bool) -> Self {
        Value::Symbol(if b { TRUE } else { FALSE }.to_string())
    }

    /// Everything except the symbol `FALSE` counts as true.
    pub fn is_truthy(&self) -> bool {
        !matches!(self, Value::Symbol(s) if s == FALSE)
    }

    pub fn as_number(&self) -> Option<Number> {
        match self {
            Value::Integer(i) => Some(Number::Int(*i)),
            Value::Float(f) => Some(Number::Float(*f)),
            _ => None,
        }
    }

    /// Equality used by `eq`/`neq` and by pattern matching: numbers compare
    /// numerically, everything else by type and content. `EOF` read from a
    /// router equals the symbol `EOF`.
    pub fn matches(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Eof, Value::Symbol(s)) | (Value::Symbol(s), Value::Eof) => s == "EOF",
            _ => match (self.as_number(), other.as_number()) {
                (Some(a), Some(b)) => a.compare(b) == Some(std::cmp::Ordering::Equal),
                _ => self == other,
            },
        }
    }

    /// Text written by `printout`: no quotes, integers bare, floats with a
    /// decimal point.
    pub fn printed(&self) -> String {
        match self {
            Value::Symbol(s) | Value::String(s) => s.clone(),
            Value::Integer(i) => i.to_string(),
            Value::Float(f) => format_float(*f),
            Value::Fact(id) => format!("<Fact-{}>", id.0),
            Value::Nil => "nil".to_string(),
            Value::Eof => "EOF".to_string(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::String(s) => f.write_str(&crate::dsl::pretty::quote(s)),
            other => f.write_str(&other.printed()),
        }
    }
}

impl From<&Atom> for Value {
    fn from(a: &Atom) -> Self {
        match a {
            Atom::Symbol(s) => Value::Symbol(s.clone()),
            Atom::String(s) => Value::String(s.clone()),
            Atom::Integer(i) => Value::Integer(*i),
            Atom::Float(f) => Value::Float(*f),
        }
    }
}

impl From<Number> for Value {
    fn from(n: Number) -> Self {
        match n {
            Number::Int(i) => Value::Integer(i),
            Number::Float(f) => Value::Float(f),
        }
    }
}
