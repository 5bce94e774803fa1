//! Concrete syntax for While^dt programs: lexer, recursive-descent parser,
//! AST, canonical pretty-printer and static checks.
//!
//! The full grammar is in `docs/grammar.md`.

mod ast;
mod check;
mod lexer;
mod parser;
mod pretty;

use std::fmt;

pub use ast::{ArithExpr, ArithOp, BoolExpr, Command, Loc, Program};
pub use check::{check, Diagnostic};
pub use lexer::KEYWORDS;
pub use parser::parse;
pub use pretty::pretty_print;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub loc: Loc,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at {}: expected {}, found {}",
            self.loc,
            self.expected.join(" or "),
            self.found
        )
    }
}

impl std::error::Error for SyntaxError {}
