//! Error type shared by every reasoning module.

use thiserror::Error;

/// Errors raised while validating inputs or running a decision procedure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A name was used that is not declared (only raised in strict mode).
    #[error("unknown name `{0}`")]
    UnknownName(String),
    /// The same identifier was declared with two different kinds.
    #[error("name `{0}` is declared with conflicting kinds")]
    NameClash(String),
    /// An axiom lies outside the fragment the requested operation supports.
    #[error("fragment violation: {0}")]
    FragmentViolation(String),
    /// A temporal knowledge base without any ABox.
    #[error("the ABox sequence is empty")]
    EmptySequence,
    /// Instantiating a set of CQs produced an ABox inconsistent with the ontology.
    #[error("inconsistent instantiation: {0}")]
    InconsistentInstantiation(String),
    /// A time index outside the permitted range.
    #[error("index {index} out of range (maximum {max})")]
    IndexOutOfRange { index: usize, max: usize },
    /// A configured search cap was exceeded; the answer is unknown.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    /// A bounded search would enumerate more candidates than allowed.
    #[error("bounds too large: {0}")]
    BoundsTooLarge(String),
    /// The propositional abstraction mixes past and future operators.
    #[error("formula is not separated: {0}")]
    NotSeparated(String),
    /// A first-order formula was evaluated with a free variable left unassigned.
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    /// A concept expression the Boolean-to-krom reduction cannot handle.
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    /// Malformed input text.
    #[error("parse error at line {line}, column {col}: expected {expected}")]
    ParseError {
        line: usize,
        col: usize,
        expected: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
