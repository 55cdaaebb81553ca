//! Syntax tree for parsed rule programs.
//!
//! Equality on constructs is structural: source positions are carried for
//! diagnostics but ignored by `==`, so a pretty-printed and re-parsed
//! construct compares equal to the original.

use std::fmt;

use super::lexer::Pos;

/// A literal value appearing in source.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Symbol(String),
    String(String),
    Integer(i64),
    Float(f64),
}

impl Atom {
    pub fn symbol(s: impl Into<String>) -> Self {
        Atom::Symbol(s.into())
    }
}

/// Built-in functions callable from tests, conditions and actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Ge,
    Gt,
    Le,
    Lt,
    Eq,
    Neq,
    And,
    Or,
    Not,
    Add,
    Sub,
    Mul,
    Div,
    Read,
}

impl Function {
    pub const ALL: [Function; 14] = [
        Function::Ge,
        Function::Gt,
        Function::Le,
        Function::Lt,
        Function::Eq,
        Function::Neq,
        Function::And,
        Function::Or,
        Function::Not,
        Function::Add,
        Function::Sub,
        Function::Mul,
        Function::Div,
        Function::Read,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::Ge => ">=",
            Function::Gt => ">",
            Function::Le => "<=",
            Function::Lt => "<",
            Function::Eq => "eq",
            Function::Neq => "neq",
            Function::And => "and",
            Function::Or => "or",
            Function::Not => "not",
            Function::Add => "+",
            Function::Sub => "-",
            Function::Mul => "*",
            Function::Div => "/",
            Function::Read => "read",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Inclusive bounds on the argument count; `None` means unbounded.
    pub fn arity(self) -> (usize, Option<usize>) {
        match self {
            Function::Ge
            | Function::Gt
            | Function::Le
            | Function::Lt
            | Function::Eq
            | Function::Neq => (2, Some(2)),
            Function::And | Function::Or => (2, None),
            Function::Not => (1, Some(1)),
            Function::Add | Function::Sub | Function::Mul | Function::Div => (2, None),
            Function::Read => (0, Some(1)),
        }
    }

    /// True for functions whose result is always TRUE or FALSE.
    pub fn is_predicate(self) -> bool {
        matches!(
            self,
            Function::Ge
                | Function::Gt
                | Function::Le
                | Function::Lt
                | Function::Eq
                | Function::Neq
                | Function::And
                | Function::Or
                | Function::Not
        )
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Constant(Atom),
    Variable(String),
    Call { function: Function, args: Vec<Expression> },
}

impl Expression {
    pub fn call(function: Function, args: Vec<Expression>) -> Self {
        Expression::Call { function, args }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expression::Variable(name.into())
    }

    /// Every variable referenced, in left-to-right order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expression::Constant(_) => {}
            Expression::Variable(v) => out.push(v),
            Expression::Call { args, .. } => {
                for a in args {
                    a.collect_variables(out);
                }
            }
        }
    }
}

/// Pattern-side field value: a variable to bind/join on, or a literal.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Variable(String),
    Constant(Atom),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternBody {
    /// `(template (slot term) ...)`
    Slots(Vec<(String, Term)>),
    /// `(relation term ...)`, including the empty `(initial-fact)` form.
    Fields(Vec<Term>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    /// `?f <- (...)` binds the matched fact's address.
    pub binding: Option<String>,
    pub relation: String,
    pub body: PatternBody,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConditionalElement {
    Pattern(Pattern),
    Test(Expression),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FactBody {
    Slots(Vec<(String, Expression)>),
    Fields(Vec<Expression>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactSpec {
    pub relation: String,
    pub body: FactBody,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrintItem {
    Crlf,
    Expr(Expression),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Assert(FactSpec),
    Retract(String),
    Printout { router: String, items: Vec<PrintItem> },
    Bind { variable: String, value: Expression },
    Open { path: Expression, router: String, mode: String },
    If { condition: Expression, then: Vec<Action>, otherwise: Vec<Action> },
}

#[derive(Debug, Clone)]
pub struct TemplateDef {
    pub name: String,
    pub doc: Option<String>,
    pub slots: Vec<String>,
    pub pos: Pos,
}

impl PartialEq for TemplateDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.doc == other.doc && self.slots == other.slots
    }
}

pub const MIN_SALIENCE: i64 = -10_000;
pub const MAX_SALIENCE: i64 = 10_000;

#[derive(Debug, Clone)]
pub struct RuleDef {
    pub name: String,
    pub doc: Option<String>,
    pub salience: i64,
    pub lhs: Vec<ConditionalElement>,
    pub rhs: Vec<Action>,
    pub pos: Pos,
}

impl PartialEq for RuleDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.doc == other.doc
            && self.salience == other.salience
            && self.lhs == other.lhs
            && self.rhs == other.rhs
    }
}

impl RuleDef {
    pub fn patterns(&self) -> impl Iterator<Item = &Pattern> {
        self.lhs.iter().filter_map(|ce| match ce {
            ConditionalElement::Pattern(p) => Some(p),
            ConditionalElement::Test(_) => None,
        })
    }

    pub fn tests(&self) -> impl Iterator<Item = &Expression> {
        self.lhs.iter().filter_map(|ce| match ce {
            ConditionalElement::Test(e) => Some(e),
            ConditionalElement::Pattern(_) => None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct FactsDef {
    pub name: String,
    pub doc: Option<String>,
    pub facts: Vec<FactSpec>,
    pub pos: Pos,
}

impl PartialEq for FactsDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.doc == other.doc && self.facts == other.facts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Construct {
    Template(TemplateDef),
    Rule(RuleDef),
    Facts(FactsDef),
}

impl Construct {
    pub fn name(&self) -> &str {
        match self {
            Construct::Template(t) => &t.name,
            Construct::Rule(r) => &r.name,
            Construct::Facts(f) => &f.name,
        }
    }

    pub fn pos(&self) -> Pos {
        match self {
            Construct::Template(t) => t.pos,
            Construct::Rule(r) => r.pos,
            Construct::Facts(f) => f.pos,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Construct::Template(_) => "deftemplate",
            Construct::Rule(_) => "defrule",
            Construct::Facts(_) => "deffacts",
        }
    }
}
