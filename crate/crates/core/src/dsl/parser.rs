//! Token stream to constructs.
//!
//! Parsing runs in two passes: tokens are first grouped into a generic
//! S-expression tree (which is where paren balance is checked), then each
//! top-level list is read as a `deftemplate`, `defrule` or `deffacts`.

use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, LexError, Pos, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("{pos}: unexpected {found}, expected {expected}")]
    UnexpectedToken {
        found: String,
        expected: String,
        pos: Pos,
    },
    #[error("{pos}: unbalanced parentheses")]
    UnbalancedParens { pos: Pos },
    #[error("{pos}: unknown construct `{name}` (expected deftemplate, defrule or deffacts)")]
    UnknownConstruct { name: String, pos: Pos },
    #[error("{pos}: unknown function `{name}`")]
    UnknownFunction { name: String, pos: Pos },
    #[error("{pos}: unknown action `{name}`")]
    UnknownAction { name: String, pos: Pos },
    #[error("{pos}: `{function}` takes {expected} argument(s), got {got}")]
    Arity {
        function: Function,
        expected: String,
        got: usize,
        pos: Pos,
    },
    #[error("{pos}: salience {value} outside [{MIN_SALIENCE}, {MAX_SALIENCE}]")]
    SalienceOutOfRange { value: i64, pos: Pos },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Lex(e) => e.pos(),
            ParseError::UnexpectedToken { pos, .. }
            | ParseError::UnbalancedParens { pos }
            | ParseError::UnknownConstruct { pos, .. }
            | ParseError::UnknownFunction { pos, .. }
            | ParseError::UnknownAction { pos, .. }
            | ParseError::Arity { pos, .. }
            | ParseError::SalienceOutOfRange { pos, .. } => *pos,
        }
    }
}

type Result<T> = std::result::Result<T, ParseError>;

#[derive(Debug, Clone)]
enum Sexp {
    Atom(Token),
    List { items: Vec<Sexp>, pos: Pos, end: Pos },
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(t) => t.pos(),
            Sexp::List { pos, .. } => *pos,
        }
    }

    fn describe(&self) -> String {
        match self {
            Sexp::Atom(t) => match t.kind {
                TokenKind::Variable => format!("`?{}`", t.lexeme),
                TokenKind::String => format!("string {:?}", t.lexeme),
                _ => format!("`{}`", t.lexeme),
            },
            Sexp::List { .. } => "list".to_string(),
        }
    }

    fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexp::Atom(t) if t.kind == TokenKind::Symbol => Some(&t.lexeme),
            _ => None,
        }
    }

    fn as_variable(&self) -> Option<&str> {
        match self {
            Sexp::Atom(t) if t.kind == TokenKind::Variable => Some(&t.lexeme),
            _ => None,
        }
    }

    fn as_string(&self) -> Option<&str> {
        match self {
            Sexp::Atom(t) if t.kind == TokenKind::String => Some(&t.lexeme),
            _ => None,
        }
    }

    fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom(_) => None,
        }
    }
}

fn unexpected(found: &Sexp, expected: &str) -> ParseError {
    ParseError::UnexpectedToken {
        found: found.describe(),
        expected: expected.to_string(),
        pos: found.pos(),
    }
}

fn unexpected_end(pos: Pos, expected: &str) -> ParseError {
    ParseError::UnexpectedToken {
        found: "`)`".to_string(),
        expected: expected.to_string(),
        pos,
    }
}

fn build_tree(tokens: &[Token]) -> Result<Vec<Sexp>> {
    let mut stack: Vec<(Pos, Vec<Sexp>)> = Vec::new();
    let mut top = Vec::new();
    for tok in tokens {
        match tok.kind {
            TokenKind::LParen => stack.push((tok.pos(), Vec::new())),
            TokenKind::RParen => {
                let (pos, items) = stack
                    .pop()
                    .ok_or(ParseError::UnbalancedParens { pos: tok.pos() })?;
                let list = Sexp::List { items, pos, end: tok.pos() };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(list),
                    None => top.push(list),
                }
            }
            _ => {
                let atom = Sexp::Atom(tok.clone());
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(atom),
                    None => top.push(atom),
                }
            }
        }
    }
    if let Some((pos, _)) = stack.first() {
        return Err(ParseError::UnbalancedParens { pos: *pos });
    }
    Ok(top)
}

/// Parses a token stream into constructs, in source order.
pub fn parse_program(tokens: &[Token]) -> Result<Vec<Construct>> {
    build_tree(tokens)?.iter().map(construct).collect()
}

/// Tokenizes and parses in one step.
pub fn parse_source(source: &str) -> Result<Vec<Construct>> {
    parse_program(&tokenize(source)?)
}

fn construct(sexp: &Sexp) -> Result<Construct> {
    let Sexp::List { items, pos, end } = sexp else {
        return Err(unexpected(sexp, "a top-level construct"));
    };
    let Some(head) = items.first() else {
        return Err(unexpected_end(*end, "a construct keyword"));
    };
    let Some(keyword) = head.as_symbol() else {
        return Err(unexpected(head, "a construct keyword"));
    };
    let mut rest = Items::new(&items[1..], *end);
    match keyword {
        "deftemplate" => template(&mut rest, *pos).map(Construct::Template),
        "defrule" => rule(&mut rest, *pos).map(Construct::Rule),
        "deffacts" => facts(&mut rest, *pos).map(Construct::Facts),
        other => Err(ParseError::UnknownConstruct {
            name: other.to_string(),
            pos: head.pos(),
        }),
    }
}

/// Cursor over the elements of one list.
struct Items<'a> {
    items: &'a [Sexp],
    idx: usize,
    end: Pos,
}

impl<'a> Items<'a> {
    fn new(items: &'a [Sexp], end: Pos) -> Self {
        Self { items, idx: 0, end }
    }

    fn peek(&self) -> Option<&'a Sexp> {
        self.items.get(self.idx)
    }

    fn next(&mut self) -> Option<&'a Sexp> {
        let item = self.items.get(self.idx);
        self.idx += usize::from(item.is_some());
        item
    }

    fn expect(&mut self, what: &str) -> Result<&'a Sexp> {
        self.next().ok_or_else(|| unexpected_end(self.end, what))
    }

    fn symbol(&mut self, what: &str) -> Result<String> {
        let item = self.expect(what)?;
        item.as_symbol()
            .map(str::to_string)
            .ok_or_else(|| unexpected(item, what))
    }

    fn optional_doc(&mut self) -> Option<String> {
        let doc = self.peek()?.as_string()?.to_string();
        self.idx += 1;
        Some(doc)
    }

    fn finish(&self) -> Result<()> {
        match self.peek() {
            Some(extra) => Err(unexpected(extra, "`)`")),
            None => Ok(()),
        }
    }

    fn remaining(&mut self) -> &'a [Sexp] {
        let rest = &self.items[self.idx..];
        self.idx = self.items.len();
        rest
    }
}

fn list_items<'a>(sexp: &'a Sexp, what: &str) -> Result<Items<'a>> {
    match sexp {
        Sexp::List { items, end, .. } => Ok(Items::new(items, *end)),
        Sexp::Atom(_) => Err(unexpected(sexp, what)),
    }
}

fn template(items: &mut Items, pos: Pos) -> Result<TemplateDef> {
    let name = items.symbol("template name")?;
    let doc = items.optional_doc();
    let mut slots = Vec::new();
    for slot in items.remaining() {
        let mut inner = list_items(slot, "`(slot <name>)`")?;
        match inner.next() {
            Some(kw) if kw.as_symbol() == Some("slot") => {}
            Some(other) => return Err(unexpected(other, "`slot`")),
            None => return Err(unexpected_end(inner.end, "`slot`")),
        }
        slots.push(inner.symbol("slot name")?);
        inner.finish()?;
    }
    Ok(TemplateDef { name, doc, slots, pos })
}

fn rule(items: &mut Items, pos: Pos) -> Result<RuleDef> {
    let name = items.symbol("rule name")?;
    let doc = items.optional_doc();
    let mut salience = 0;
    if let Some(first) = items.peek() {
        if let Some(decl) = first.as_list() {
            if decl.first().and_then(Sexp::as_symbol) == Some("declare") {
                items.next();
                salience = declaration(first)?;
            }
        }
    }

    let mut lhs = Vec::new();
    loop {
        let item = items.expect("`=>`")?;
        if item.as_symbol() == Some("=>") {
            break;
        }
        if let Some(var) = item.as_variable() {
            let arrow = items.expect("`<-`")?;
            if arrow.as_symbol() != Some("<-") {
                return Err(unexpected(arrow, "`<-`"));
            }
            let target = items.expect("a pattern")?;
            let mut pattern = pattern(target)?;
            pattern.binding = Some(var.to_string());
            lhs.push(ConditionalElement::Pattern(pattern));
            continue;
        }
        lhs.push(conditional_element(item)?);
    }

    let rhs = items
        .remaining()
        .iter()
        .map(action)
        .collect::<Result<Vec<_>>>()?;
    Ok(RuleDef { name, doc, salience, lhs, rhs, pos })
}

fn declaration(sexp: &Sexp) -> Result<i64> {
    let mut decl = list_items(sexp, "`(declare ...)`")?;
    decl.next();
    let prop = decl.expect("`(salience <int>)`")?;
    let mut inner = list_items(prop, "`(salience <int>)`")?;
    match inner.next() {
        Some(kw) if kw.as_symbol() == Some("salience") => {}
        Some(other) => return Err(unexpected(other, "`salience`")),
        None => return Err(unexpected_end(inner.end, "`salience`")),
    }
    let value = inner.expect("an integer salience")?;
    let salience = match value {
        Sexp::Atom(t) if t.kind == TokenKind::Integer => t
            .lexeme
            .parse::<i64>()
            .map_err(|_| unexpected(value, "an integer salience"))?,
        _ => return Err(unexpected(value, "an integer salience")),
    };
    if !(MIN_SALIENCE..=MAX_SALIENCE).contains(&salience) {
        return Err(ParseError::SalienceOutOfRange {
            value: salience,
            pos: value.pos(),
        });
    }
    inner.finish()?;
    decl.finish()?;
    Ok(salience)
}

fn conditional_element(sexp: &Sexp) -> Result<ConditionalElement> {
    let Some(list) = sexp.as_list() else {
        return Err(unexpected(sexp, "a pattern or test"));
    };
    if list.first().and_then(Sexp::as_symbol) == Some("test") {
        let mut items = list_items(sexp, "a test")?;
        items.next();
        let expr = expression(items.expect("a test expression")?)?;
        items.finish()?;
        return Ok(ConditionalElement::Test(expr));
    }
    pattern(sexp).map(ConditionalElement::Pattern)
}

fn pattern(sexp: &Sexp) -> Result<Pattern> {
    let mut items = list_items(sexp, "a pattern")?;
    let relation = items.symbol("a relation or template name")?;
    let rest = items.remaining();
    let body = if !rest.is_empty() && rest.iter().all(|s| s.as_list().is_some()) {
        let mut slots = Vec::with_capacity(rest.len());
        for slot in rest {
            let mut inner = list_items(slot, "a slot constraint")?;
            let name = inner.symbol("a slot name")?;
            let value = term(inner.expect("a slot value")?)?;
            inner.finish()?;
            slots.push((name, value));
        }
        PatternBody::Slots(slots)
    } else {
        PatternBody::Fields(rest.iter().map(term).collect::<Result<_>>()?)
    };
    Ok(Pattern { binding: None, relation, body })
}

fn atom(tok: &Token) -> Option<Atom> {
    match tok.kind {
        TokenKind::Symbol => Some(Atom::Symbol(tok.lexeme.clone())),
        TokenKind::String => Some(Atom::String(tok.lexeme.clone())),
        TokenKind::Integer => tok.lexeme.parse().ok().map(Atom::Integer),
        TokenKind::Float => tok.lexeme.parse().ok().map(Atom::Float),
        _ => None,
    }
}

fn term(sexp: &Sexp) -> Result<Term> {
    match sexp {
        Sexp::Atom(t) if t.kind == TokenKind::Variable => Ok(Term::Variable(t.lexeme.clone())),
        Sexp::Atom(t) => atom(t)
            .map(Term::Constant)
            .ok_or_else(|| unexpected(sexp, "a variable or constant")),
        Sexp::List { .. } => Err(unexpected(sexp, "a variable or constant")),
    }
}

fn expression(sexp: &Sexp) -> Result<Expression> {
    match sexp {
        Sexp::Atom(t) if t.kind == TokenKind::Variable => Ok(Expression::Variable(t.lexeme.clone())),
        Sexp::Atom(t) => atom(t)
            .map(Expression::Constant)
            .ok_or_else(|| unexpected(sexp, "an expression")),
        Sexp::List { items, end, .. } => {
            let Some(head) = items.first() else {
                return Err(unexpected_end(*end, "a function name"));
            };
            let Some(name) = head.as_symbol() else {
                return Err(unexpected(head, "a function name"));
            };
            let function = Function::from_name(name).ok_or_else(|| ParseError::UnknownFunction {
                name: name.to_string(),
                pos: head.pos(),
            })?;
            let args = items[1..]
                .iter()
                .map(expression)
                .collect::<Result<Vec<_>>>()?;
            check_arity(function, args.len(), head.pos())?;
            Ok(Expression::Call { function, args })
        }
    }
}

fn check_arity(function: Function, got: usize, pos: Pos) -> Result<()> {
    let (min, max) = function.arity();
    if got >= min && max.is_none_or(|m| got <= m) {
        return Ok(());
    }
    let expected = match max {
        Some(m) if m == min => format!("{min}"),
        Some(m) => format!("{min} to {m}"),
        None => format!("at least {min}"),
    };
    Err(ParseError::Arity { function, expected, got, pos })
}

/// True if a list element of an asserted fact reads as `(slot value)`
/// rather than a function call in an ordered field.
fn is_slot_form(sexp: &Sexp) -> bool {
    match sexp.as_list() {
        Some([head, _]) => head
            .as_symbol()
            .is_some_and(|name| Function::from_name(name).is_none()),
        _ => false,
    }
}

fn fact_spec(sexp: &Sexp) -> Result<FactSpec> {
    let mut items = list_items(sexp, "a fact")?;
    let relation = items.symbol("a relation or template name")?;
    let rest = items.remaining();
    let body = if !rest.is_empty() && rest.iter().all(is_slot_form) {
        let mut slots = Vec::with_capacity(rest.len());
        for slot in rest {
            let mut inner = list_items(slot, "a slot value")?;
            let name = inner.symbol("a slot name")?;
            let value = expression(inner.expect("a slot value")?)?;
            slots.push((name, value));
        }
        FactBody::Slots(slots)
    } else {
        FactBody::Fields(rest.iter().map(expression).collect::<Result<_>>()?)
    };
    Ok(FactSpec { relation, body })
}

fn action(sexp: &Sexp) -> Result<Action> {
    let mut items = list_items(sexp, "an action")?;
    let head = items.expect("an action name")?;
    let Some(name) = head.as_symbol() else {
        return Err(unexpected(head, "an action name"));
    };
    let act = match name {
        "assert" => Action::Assert(fact_spec(items.expect("a fact")?)?),
        "retract" => {
            let target = items.expect("a fact variable")?;
            let var = target
                .as_variable()
                .ok_or_else(|| unexpected(target, "a fact variable"))?;
            Action::Retract(var.to_string())
        }
        "printout" => {
            let router = items.symbol("a router name")?;
            let printed = items
                .remaining()
                .iter()
                .map(|s| match s.as_symbol() {
                    Some("crlf") => Ok(PrintItem::Crlf),
                    _ => expression(s).map(PrintItem::Expr),
                })
                .collect::<Result<Vec<_>>>()?;
            Action::Printout { router, items: printed }
        }
        "bind" => {
            let target = items.expect("a variable")?;
            let variable = target
                .as_variable()
                .ok_or_else(|| unexpected(target, "a variable"))?
                .to_string();
            let value = expression(items.expect("a value")?)?;
            Action::Bind { variable, value }
        }
        "open" => {
            let path = expression(items.expect("a file name")?)?;
            let router = items.symbol("a router name")?;
            let mode = match items.next() {
                None => "r".to_string(),
                Some(m) => m
                    .as_string()
                    .ok_or_else(|| unexpected(m, "a mode string"))?
                    .to_string(),
            };
            Action::Open { path, router, mode }
        }
        "if" => {
            let condition = expression(items.expect("a condition")?)?;
            let kw = items.expect("`then`")?;
            if kw.as_symbol() != Some("then") {
                return Err(unexpected(kw, "`then`"));
            }
            let mut then = Vec::new();
            let mut otherwise = Vec::new();
            let mut in_else = false;
            for item in items.remaining() {
                if item.as_symbol() == Some("else") && !in_else {
                    in_else = true;
                    continue;
                }
                let act = action(item)?;
                if in_else {
                    otherwise.push(act);
                } else {
                    then.push(act);
                }
            }
            Action::If { condition, then, otherwise }
        }
        other => {
            return Err(ParseError::UnknownAction {
                name: other.to_string(),
                pos: head.pos(),
            })
        }
    };
    items.finish()?;
    Ok(act)
}

fn facts(items: &mut Items, pos: Pos) -> Result<FactsDef> {
    let name = items.symbol("deffacts name")?;
    let doc = items.optional_doc();
    let facts = items
        .remaining()
        .iter()
        .map(fact_spec)
        .collect::<Result<Vec<_>>>()?;
    Ok(FactsDef { name, doc, facts, pos })
}
