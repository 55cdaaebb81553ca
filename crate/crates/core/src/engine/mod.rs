//! Forward-chaining inference over validated rule programs.
//!
//! Conflict resolution is salience first, then recency (most recent
//! activation first). Identical facts are rejected on assert.

mod eval;
mod router;
mod session;
mod value;

use thiserror::Error;

use crate::dsl::Function;

pub use eval::Bindings;
pub use router::{OpenMode, SessionIo};
pub use session::{Activation, AssertOutcome, Fact, FactData, FactInput, Firing, Session};
pub use value::{FactId, Value, FALSE, TRUE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{template}` has no slot `{slot}`")]
    UnknownSlot { template: String, slot: String },
    #[error("template `{0}` cannot be asserted with positional fields")]
    OrderedTemplateFact(String),
    #[error("no live fact {0}")]
    UnknownFact(FactId),
    #[error("`{function}` cannot operate on {value}")]
    TypeMismatch { function: Function, value: String },
    #[error("variable `?{0}` is unbound")]
    UnboundVariable(String),
    #[error("`?{variable}` holds {value}, not a fact address")]
    NotAFact { variable: String, value: String },
    #[error("router `{0}` is not open")]
    RouterNotOpen(String),
    #[error("router `{0}` is already open")]
    RouterAlreadyOpen(String),
    #[error("invalid open mode {0:?}")]
    InvalidMode(String),
    #[error("invalid file name {0}")]
    InvalidPath(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("division by zero")]
    DivideByZero,
    #[error("integer overflow in `{0}`")]
    Overflow(Function),
    #[error("fact `{0}` would contain EOF (input exhausted)")]
    EofInFact(String),
}

/// An RHS failure, with the rule that was firing.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("rule `{rule}` (firing #{fires}): {error}")]
pub struct RunError {
    pub rule: String,
    /// Fires completed, counting the failing one.
    pub fires: usize,
    #[source]
    pub error: EngineError,
}
