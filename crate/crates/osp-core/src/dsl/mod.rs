//! The surface language: a small script format (`.osp` files) that declares
//! archetypes with fields and abilities, then drives the engine with
//! top-level statements.
//!
//! The pipeline is conventional: [`tokenize`] → [`parse`] → [`check`] →
//! [`run_program`]. Parsing stops at the first syntax error and reports it
//! with the set of tokens that would have been accepted; checking collects
//! every static fault (unknown names, context violations such as `visit`
//! outside an ability body, kind mismatches) with source positions.
//! Interpretation builds a [`Registry`](crate::archetype::Registry) from the
//! declarations, installs interpreted ability bodies, and executes the
//! top-level statements in order against a fresh [`Engine`].
//!
//! [`run_source`] bundles the whole pipeline for callers that just want to
//! execute a script and collect the trace, reports, and final snapshot.

mod ast;
mod check;
mod interp;
mod parser;
mod printer;
mod token;

pub use ast::{
    AbilityDecl, ArchetypeDecl, BinOp, Expr, ExprKind, FieldDecl, Program, Stmt, UnOp,
};
pub use check::check;
pub use interp::{build_registry, run_program, run_source, RunFailure, RunOutput};
pub use parser::parse;
pub use printer::print;
pub use token::{tokenize, Pos, Tok, Token};

use std::fmt;

/// How serious a diagnostic is. Every diagnostic currently produced is an
/// error; the field exists so downstream tooling can keep warnings apart
/// once they appear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
        }
    }
}

/// A positioned message about the source text. Lines and columns are
/// 1-based and count characters, not bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub pos: Pos,
    pub message: String,
}

impl Diagnostic {
    pub fn error(pos: Pos, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            pos,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.pos, self.severity, self.message)
    }
}
