//! Tokenizer for the rule language.
//!
//! The surface syntax is a small S-expression dialect: parentheses, bare
//! symbols (hyphens allowed anywhere), `?name` variables, double-quoted
//! strings with `\"` and `\\` escapes, and integer/float literals. A `;`
//! starts a comment that runs to the end of the line.

use std::fmt;
use std::ops::Range;

use thiserror::Error;

/// 1-based line and column (columns count characters, not bytes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl Pos {
    pub fn new(line: usize, column: usize) -> Self {
        Self { line, column }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    LParen,
    RParen,
    Symbol,
    Variable,
    String,
    Integer,
    Float,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Token text. Variables drop the leading `?`, strings drop their quotes
    /// and have escapes resolved.
    pub lexeme: String,
    pub line: usize,
    pub column: usize,
    /// Byte range of the raw token in the source.
    pub span: Range<usize>,
}

impl Token {
    pub fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("{pos}: unterminated string")]
    UnterminatedString { pos: Pos },
    #[error("{pos}: illegal character {ch:?}")]
    IllegalCharacter { ch: char, pos: Pos },
    #[error("{pos}: numeric literal `{text}` is out of range")]
    NumberOutOfRange { text: String, pos: Pos },
}

impl LexError {
    pub fn pos(&self) -> Pos {
        match self {
            LexError::UnterminatedString { pos }
            | LexError::IllegalCharacter { pos, .. }
            | LexError::NumberOutOfRange { pos, .. } => *pos,
        }
    }
}

/// Characters that end a bare atom.
fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';')
}

/// Constraint connectives and control characters have no meaning in this
/// dialect and are rejected outright.
fn is_illegal(c: char) -> bool {
    matches!(c, '&' | '|' | '~') || (c.is_control() && !c.is_whitespace())
}

/// Shape of a numeric literal: optional sign, digits with an optional
/// fractional part, optional exponent. Anything else is a symbol, so `-`,
/// `-type` and `1st` stay symbols.
pub(crate) fn numeric_shape(text: &str) -> Option<TokenKind> {
    let body = text.strip_prefix(['+', '-']).unwrap_or(text);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (mantissa, None),
    };
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !frac_part.is_none_or(all_digits) {
        return None;
    }
    if int_part.is_empty() && frac_part.is_none_or(str::is_empty) {
        return None;
    }
    if let Some(exp) = exponent {
        let digits = exp.strip_prefix(['+', '-']).unwrap_or(exp);
        if digits.is_empty() || !all_digits(digits) {
            return None;
        }
    }
    if frac_part.is_some() || exponent.is_some() {
        Some(TokenKind::Float)
    } else {
        Some(TokenKind::Integer)
    }
}

struct Cursor<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            chars: src.char_indices().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn peek(&mut self) -> Option<(usize, char)> {
        self.chars.peek().copied()
    }

    fn offset(&mut self) -> usize {
        self.peek().map_or(self.src.len(), |(i, _)| i)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor::new(source);
    let mut tokens = Vec::new();

    while let Some((start, c)) = cur.peek() {
        let pos = cur.pos();
        match c {
            c if c.is_whitespace() => {
                cur.bump();
            }
            ';' => {
                while let Some((_, c)) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            }
            '(' | ')' => {
                cur.bump();
                let kind = if c == '(' { TokenKind::LParen } else { TokenKind::RParen };
                tokens.push(Token {
                    kind,
                    lexeme: c.to_string(),
                    line: pos.line,
                    column: pos.column,
                    span: start..start + 1,
                });
            }
            '"' => {
                cur.bump();
                let mut text = String::new();
                loop {
                    match cur.bump() {
                        None => return Err(LexError::UnterminatedString { pos }),
                        Some('"') => break,
                        Some('\\') => match cur.bump() {
                            None => return Err(LexError::UnterminatedString { pos }),
                            Some(escaped) => text.push(escaped),
                        },
                        Some(other) => text.push(other),
                    }
                }
                let end = cur.offset();
                tokens.push(Token {
                    kind: TokenKind::String,
                    lexeme: text,
                    line: pos.line,
                    column: pos.column,
                    span: start..end,
                });
            }
            c if is_illegal(c) => return Err(LexError::IllegalCharacter { ch: c, pos }),
            _ => {
                while let Some((_, c)) = cur.peek() {
                    if is_delimiter(c) {
                        break;
                    }
                    if is_illegal(c) {
                        return Err(LexError::IllegalCharacter { ch: c, pos: cur.pos() });
                    }
                    cur.bump();
                }
                let end = cur.offset();
                let raw = &source[start..end];
                let (kind, lexeme) = if let Some(name) = raw.strip_prefix('?') {
                    // A bare `?` (single-field wildcard) is not supported.
                    if name.is_empty() || name.starts_with('?') {
                        return Err(LexError::IllegalCharacter { ch: '?', pos });
                    }
                    (TokenKind::Variable, name.to_string())
                } else {
                    match numeric_shape(raw) {
                        Some(TokenKind::Integer) => {
                            if raw.parse::<i64>().is_err() {
                                return Err(LexError::NumberOutOfRange {
                                    text: raw.to_string(),
                                    pos,
                                });
                            }
                            (TokenKind::Integer, raw.to_string())
                        }
                        Some(kind) => {
                            let ok = raw.parse::<f64>().map(f64::is_finite).unwrap_or(false);
                            if !ok {
                                return Err(LexError::NumberOutOfRange {
                                    text: raw.to_string(),
                                    pos,
                                });
                            }
                            (kind, raw.to_string())
                        }
                        None => (TokenKind::Symbol, raw.to_string()),
                    }
                };
                tokens.push(Token {
                    kind,
                    lexeme,
                    line: pos.line,
                    column: pos.column,
                    span: start..end,
                });
            }
        }
    }
    Ok(tokens)
}
