//! OpenQASM frontend.
//!
//! Supports the OpenQASM 2.0 core (registers, gate statements with constant
//! parameter expressions, measure, reset, barrier and non-recursive `gate`
//! macros) plus the declaration/statement subset of OpenQASM 3. The standard
//! gate table is switched on by `include "qelib1.inc";` (or
//! `include "stdgates.inc";` for version 3); include files are never read
//! from disk.

mod emit;
mod lexer;
mod parser;

use std::fmt;

use thiserror::Error;

pub use emit::{emit_qasm2, zyz_to_u3, EmitError};
pub use parser::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceVersion {
    Qasm2,
    Qasm3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownGate,
    Arity,
    IndexRange,
    UnsupportedFeature,
    UnknownVersion,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::UnknownGate => "unknown-gate",
            ParseErrorKind::Arity => "arity",
            ParseErrorKind::IndexRange => "index-range",
            ParseErrorKind::UnsupportedFeature => "unsupported-feature",
            ParseErrorKind::UnknownVersion => "unknown-version",
        })
    }
}

/// A parse failure; `line` and `column` are 1-based positions in the
/// original text.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {kind} error: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(
        kind: ParseErrorKind,
        line: usize,
        column: usize,
        message: impl Into<String>,
    ) -> Self {
        Self {
            kind,
            line,
            column,
            message: message.into(),
        }
    }
}

/// Identifies the language version from the header after trimming leading
/// whitespace: `OPENQASM 2.0;` or `OPENQASM 3.0;` / `OPENQASM 3;`.
pub fn detect_version(text: &str) -> Result<SourceVersion, ParseError> {
    let trimmed = text.trim_start();
    let skipped = &text[..text.len() - trimmed.len()];
    let line = 1 + skipped.matches('\n').count();
    let column = 1 + skipped.rsplit('\n').next().map_or(0, |s| s.chars().count());

    let header = trimmed.split(';').next().unwrap_or("");
    let shown: String = trimmed
        .lines()
        .next()
        .unwrap_or("")
        .chars()
        .take(40)
        .collect();
    let mut words = header.split_whitespace();
    let version = match (words.next(), words.next(), words.next()) {
        (Some("OPENQASM"), Some(v), None) if trimmed.len() > header.len() => match v {
            "2.0" => Some(SourceVersion::Qasm2),
            "3.0" | "3" => Some(SourceVersion::Qasm3),
            _ => None,
        },
        _ => None,
    };
    version.ok_or_else(|| {
        ParseError::new(
            ParseErrorKind::UnknownVersion,
            line,
            column,
            format!("unrecognized OpenQASM version header `{shown}`"),
        )
    })
}
