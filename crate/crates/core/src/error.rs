use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by loading, refining and analysing embeddings.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// Malformed embedding file content. `line` is 1-based when known.
    #[error("format error{}: {message}", at_line(*line))]
    Format {
        line: Option<usize>,
        message: String,
    },

    /// The record stream ended early; `record` is the 0-based index of the
    /// first incomplete record.
    #[error("truncated input: record {record} is incomplete")]
    Truncated { record: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A parse failure in a line-oriented text input (tagged TSV, JSONL).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported schema version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },

    #[error("unknown token {token:?}{}", in_table(table))]
    UnknownToken {
        token: String,
        table: Option<String>,
    },

    #[error("undefined input: {0}")]
    Undefined(String),
}

fn at_line(line: Option<usize>) -> String {
    line.map(|l| format!(" at line {l}")).unwrap_or_default()
}

fn in_table(table: &Option<String>) -> String {
    table
        .as_ref()
        .map(|t| format!(" in {t} table"))
        .unwrap_or_default()
}

impl Error {
    pub(crate) fn format(message: impl Into<String>) -> Self {
        Error::Format {
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn format_at(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line: Some(line),
            message: message.into(),
        }
    }

    pub(crate) fn unknown(token: impl Into<String>) -> Self {
        Error::UnknownToken {
            token: token.into(),
            table: None,
        }
    }
}
