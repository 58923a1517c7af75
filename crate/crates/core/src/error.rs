use thiserror::Error;

/// Errors raised by the mapping engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    /// A well-formed text that violates a typing rule (unknown relation,
    /// arity mismatch, unsafe variable, ...). `symbol` names the offender.
    #[error("semantic error at `{symbol}`: {message}")]
    Semantic { symbol: String, message: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    /// The operation only accepts a narrower class of dependencies.
    #[error("unsupported mapping class: {0}")]
    Unsupported(String),

    #[error("pool error: {0}")]
    Pool(String),
}

impl MapError {
    pub fn semantic(symbol: impl Into<String>, message: impl Into<String>) -> Self {
        MapError::Semantic {
            symbol: symbol.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = MapError> = std::result::Result<T, E>;
