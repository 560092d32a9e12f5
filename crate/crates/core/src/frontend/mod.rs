//! Lexing, parsing, name resolution and type checking.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod typecheck;
pub mod typed;

use thiserror::Error;

use crate::diagnostics::{Located, Span};

pub use ast::{Literal, RawSpec, TypeTag};
pub use lexer::{tokenize, LexError};
pub use parser::{parse, ParseError};
pub use typecheck::{resolve_and_typecheck, SemanticError};
pub use typed::{StreamId, StreamKind, TExpr, TExprKind, TypedSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Semantic(#[from] SemanticError),
}

impl Located for FrontendError {
    fn span(&self) -> Option<Span> {
        match self {
            FrontendError::Lex(e) => e.span(),
            FrontendError::Parse(e) => e.span(),
            FrontendError::Semantic(e) => e.span(),
        }
    }
}

pub fn parse_str(source: &str) -> Result<RawSpec, FrontendError> {
    Ok(parse(&tokenize(source)?)?)
}

/// Source text to a validated typed specification.
pub fn compile_str(source: &str) -> Result<TypedSpec, FrontendError> {
    Ok(resolve_and_typecheck(&parse_str(source)?)?)
}
