use thiserror::Error;

use super::ast::{Span, ValueKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("input is not valid UTF-8 (byte offset {offset})")]
    InvalidUtf8 { offset: usize },

    #[error("{span}: lexical error: {message}")]
    Lex { span: Span, message: String },

    #[error("{span}: syntax error: {message}")]
    Syntax { span: Span, message: String },

    #[error("{span}: duplicate key `{key}` (first defined at {first})")]
    DuplicateKey { key: String, span: Span, first: Span },

    #[error("{span}: duplicate block `{block}` (first defined at {first})")]
    DuplicateBlock { block: String, span: Span, first: Span },

    #[error("scenario `{scenario}` extends unknown scenario `{parent}`")]
    UnknownParent { scenario: String, parent: String },

    #[error("cyclic `extends` chain: {}", chain.join(" -> "))]
    CyclicExtends { chain: Vec<String> },

    #[error("scenario `{scenario}`: missing required key `{path}`")]
    MissingKey { scenario: String, path: String },

    #[error("{span}: `{path}` overrides a {expected} value with a {found} value")]
    TypeMismatch { path: String, span: Span, expected: ValueKind, found: ValueKind },

    #[error("{span}: invalid value for `{path}`: {message}")]
    InvalidValue { path: String, span: Span, message: String },

    #[error("scenario `{scenario}` designates more than one external (VUT) player: {}", players.join(", "))]
    MultipleVut { scenario: String, players: Vec<String> },

    #[error("scenario `{scenario}` has no external (VUT) player")]
    NoVut { scenario: String },

    #[error("scene document: {0}")]
    Scene(String),

    #[error("duplicate scenario `{name}` in registry")]
    DuplicateScenario { name: String },

    #[error("{path}: {source}")]
    File { path: String, source: Box<DslError> },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl DslError {
    /// Source location, when the error has one.
    pub fn span(&self) -> Option<Span> {
        match self {
            DslError::Lex { span, .. }
            | DslError::Syntax { span, .. }
            | DslError::DuplicateKey { span, .. }
            | DslError::DuplicateBlock { span, .. }
            | DslError::TypeMismatch { span, .. }
            | DslError::InvalidValue { span, .. } => Some(*span),
            DslError::File { source, .. } => source.span(),
            _ => None,
        }
    }
}
