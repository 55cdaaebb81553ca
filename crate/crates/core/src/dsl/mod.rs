//! The rule language: tokenizer, parser, validator and pretty-printer.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod validate;

pub use ast::*;
pub use lexer::{tokenize, LexError, Pos, Token, TokenKind};
pub use parser::{parse_program, parse_source, ParseError};
pub use pretty::{pretty_print, pretty_print_program};
pub use validate::{validate, Diagnostic, DiagnosticKind, Program, INITIAL_FACT, STANDARD_ROUTER};
