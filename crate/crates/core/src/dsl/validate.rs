//! Static checks over a parsed program.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use super::ast::*;
use super::lexer::Pos;

/// Ordered fact present in every session from reset onwards.
pub const INITIAL_FACT: &str = "initial-fact";
/// Router name for standard input/output.
pub const STANDARD_ROUTER: &str = "t";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    UndefinedTemplate(String),
    UnknownSlot { template: String, slot: String },
    DuplicateSlot(String),
    EmptyTemplate,
    DuplicateConstruct(String),
    UnboundVariable(String),
    NotAFactAddress(String),
    NonBooleanCondition,
    UnknownRouter(String),
    OrderedTemplateFact(String),
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticKind::UndefinedTemplate(t) => write!(f, "undefined template `{t}`"),
            DiagnosticKind::UnknownSlot { template, slot } => {
                write!(f, "template `{template}` has no slot `{slot}`")
            }
            DiagnosticKind::DuplicateSlot(s) => write!(f, "duplicate slot `{s}`"),
            DiagnosticKind::EmptyTemplate => write!(f, "template declares no slots"),
            DiagnosticKind::DuplicateConstruct(kind) => write!(f, "duplicate {kind}"),
            DiagnosticKind::UnboundVariable(v) => write!(f, "variable `?{v}` is never bound"),
            DiagnosticKind::NotAFactAddress(v) => {
                write!(f, "`?{v}` is not bound to a fact address")
            }
            DiagnosticKind::NonBooleanCondition => write!(f, "condition is not a boolean expression"),
            DiagnosticKind::UnknownRouter(r) => write!(f, "router `{r}` is never opened"),
            DiagnosticKind::OrderedTemplateFact(t) => {
                write!(f, "template `{t}` used with positional fields")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub construct: String,
    pub kind: DiagnosticKind,
    pub pos: Pos,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: in `{}`: {}", self.pos, self.construct, self.kind)
    }
}

struct Checker<'a> {
    templates: HashMap<&'a str, &'a TemplateDef>,
    routers: HashSet<&'a str>,
    out: Vec<Diagnostic>,
    construct: &'a str,
    pos: Pos,
}

/// Variable environment while walking one rule.
#[derive(Clone, Default)]
struct Scope {
    bound: BTreeSet<String>,
    facts: BTreeSet<String>,
}

impl Scope {
    fn intersect(&self, other: &Scope) -> Scope {
        Scope {
            bound: self.bound.intersection(&other.bound).cloned().collect(),
            facts: self.facts.intersection(&other.facts).cloned().collect(),
        }
    }
}

impl<'a> Checker<'a> {
    fn report(&mut self, kind: DiagnosticKind) {
        let d = Diagnostic {
            construct: self.construct.to_string(),
            kind,
            pos: self.pos,
        };
        // Positions are per construct, so a repeat would say nothing new.
        if !self.out.contains(&d) {
            self.out.push(d);
        }
    }

    fn slot_exists(&mut self, template: &TemplateDef, slot: &str) {
        if !template.slots.iter().any(|s| s == slot) {
            self.report(DiagnosticKind::UnknownSlot {
                template: template.name.clone(),
                slot: slot.to_string(),
            });
        }
    }

    fn expression(&mut self, expr: &Expression, scope: &Scope) {
        match expr {
            Expression::Constant(_) => {}
            Expression::Variable(v) => {
                if !scope.bound.contains(v) {
                    self.report(DiagnosticKind::UnboundVariable(v.clone()));
                }
            }
            Expression::Call { function, args } => {
                if *function == Function::Read {
                    if let Some(Expression::Constant(Atom::Symbol(router))) = args.first() {
                        self.router(router);
                    }
                }
                for a in args {
                    self.expression(a, scope);
                }
            }
        }
    }

    fn condition(&mut self, expr: &Expression, scope: &Scope) {
        let boolean = match expr {
            Expression::Constant(Atom::Symbol(s)) => s == "TRUE" || s == "FALSE",
            Expression::Constant(_) => false,
            Expression::Variable(_) => true,
            Expression::Call { function, .. } => function.is_predicate(),
        };
        if !boolean {
            self.report(DiagnosticKind::NonBooleanCondition);
        }
        self.expression(expr, scope);
    }

    fn router(&mut self, name: &str) {
        if name != STANDARD_ROUTER && !self.routers.contains(name) {
            self.report(DiagnosticKind::UnknownRouter(name.to_string()));
        }
    }

    fn pattern(&mut self, pattern: &Pattern, scope: &mut Scope) {
        let template = self.templates.get(pattern.relation.as_str()).copied();
        let mut terms: Vec<&Term> = Vec::new();
        match (&pattern.body, template) {
            (PatternBody::Slots(slots), Some(t)) => {
                for (slot, term) in slots {
                    self.slot_exists(t, slot);
                    terms.push(term);
                }
            }
            (PatternBody::Slots(slots), None) => {
                self.report(DiagnosticKind::UndefinedTemplate(pattern.relation.clone()));
                terms.extend(slots.iter().map(|(_, t)| t));
            }
            (PatternBody::Fields(fields), Some(t)) if !fields.is_empty() => {
                self.report(DiagnosticKind::OrderedTemplateFact(t.name.clone()));
            }
            (PatternBody::Fields(fields), _) => terms.extend(fields),
        }
        for term in terms {
            if let Term::Variable(v) = term {
                scope.bound.insert(v.clone());
            }
        }
        if let Some(binding) = &pattern.binding {
            scope.bound.insert(binding.clone());
            scope.facts.insert(binding.clone());
        }
    }

    fn fact(&mut self, spec: &FactSpec, scope: &Scope) {
        let template = self.templates.get(spec.relation.as_str()).copied();
        match (&spec.body, template) {
            (FactBody::Slots(slots), Some(t)) => {
                for (slot, value) in slots {
                    self.slot_exists(t, slot);
                    self.expression(value, scope);
                }
            }
            (FactBody::Slots(slots), None) => {
                self.report(DiagnosticKind::UndefinedTemplate(spec.relation.clone()));
                for (_, value) in slots {
                    self.expression(value, scope);
                }
            }
            (FactBody::Fields(fields), Some(t)) if !fields.is_empty() => {
                self.report(DiagnosticKind::OrderedTemplateFact(t.name.clone()));
            }
            (FactBody::Fields(fields), _) => {
                for value in fields {
                    self.expression(value, scope);
                }
            }
        }
    }

    fn actions(&mut self, actions: &[Action], scope: &mut Scope) {
        for action in actions {
            match action {
                Action::Assert(spec) => self.fact(spec, scope),
                Action::Retract(v) => {
                    if !scope.bound.contains(v) {
                        self.report(DiagnosticKind::UnboundVariable(v.clone()));
                    } else if !scope.facts.contains(v) {
                        self.report(DiagnosticKind::NotAFactAddress(v.clone()));
                    }
                }
                Action::Printout { router, items } => {
                    self.router(router);
                    for item in items {
                        if let PrintItem::Expr(e) = item {
                            self.expression(e, scope);
                        }
                    }
                }
                Action::Bind { variable, value } => {
                    self.expression(value, scope);
                    scope.bound.insert(variable.clone());
                    scope.facts.remove(variable);
                }
                Action::Open { path, .. } => self.expression(path, scope),
                Action::If { condition, then, otherwise } => {
                    self.condition(condition, scope);
                    let mut then_scope = scope.clone();
                    self.actions(then, &mut then_scope);
                    let mut else_scope = scope.clone();
                    self.actions(otherwise, &mut else_scope);
                    *scope = then_scope.intersect(&else_scope);
                }
            }
        }
    }
}

fn opened_routers<'a>(actions: &'a [Action], out: &mut HashSet<&'a str>) {
    for action in actions {
        match action {
            Action::Open { router, .. } => {
                out.insert(router);
            }
            Action::If { then, otherwise, .. } => {
                opened_routers(then, out);
                opened_routers(otherwise, out);
            }
            _ => {}
        }
    }
}

/// Returns every problem found; an empty list means the program is valid.
pub fn validate(program: &[Construct]) -> Vec<Diagnostic> {
    let mut templates = HashMap::new();
    let mut routers = HashSet::new();
    for c in program {
        match c {
            Construct::Template(t) => {
                templates.entry(t.name.as_str()).or_insert(t);
            }
            Construct::Rule(r) => opened_routers(&r.rhs, &mut routers),
            Construct::Facts(_) => {}
        }
    }

    let mut checker = Checker {
        templates,
        routers,
        out: Vec::new(),
        construct: "",
        pos: Pos::default(),
    };
    let mut seen: HashSet<(&str, &str)> = HashSet::new();

    for c in program {
        checker.construct = c.name();
        checker.pos = c.pos();
        if !seen.insert((c.kind(), c.name())) {
            checker.report(DiagnosticKind::DuplicateConstruct(c.kind().to_string()));
        }
        match c {
            Construct::Template(t) => {
                if t.slots.is_empty() {
                    checker.report(DiagnosticKind::EmptyTemplate);
                }
                let mut names = HashSet::new();
                for s in &t.slots {
                    if !names.insert(s) {
                        checker.report(DiagnosticKind::DuplicateSlot(s.clone()));
                    }
                }
            }
            Construct::Rule(r) => {
                let mut scope = Scope::default();
                for ce in &r.lhs {
                    match ce {
                        ConditionalElement::Pattern(p) => checker.pattern(p, &mut scope),
                        ConditionalElement::Test(e) => checker.condition(e, &scope),
                    }
                }
                checker.actions(&r.rhs, &mut scope);
            }
            Construct::Facts(f) => {
                let scope = Scope::default();
                for spec in &f.facts {
                    checker.fact(spec, &scope);
                }
            }
        }
    }
    checker.out
}

/// A program that passed [`validate`]. The engine only accepts these.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    constructs: Vec<Construct>,
}

impl Program {
    pub fn new(constructs: Vec<Construct>) -> Result<Self, Vec<Diagnostic>> {
        let diagnostics = validate(&constructs);
        if diagnostics.is_empty() {
            Ok(Self { constructs })
        } else {
            Err(diagnostics)
        }
    }

    pub fn constructs(&self) -> &[Construct] {
        &self.constructs
    }

    pub fn templates(&self) -> impl Iterator<Item = &TemplateDef> {
        self.constructs.iter().filter_map(|c| match c {
            Construct::Template(t) => Some(t),
            _ => None,
        })
    }

    pub fn rules(&self) -> impl Iterator<Item = &RuleDef> {
        self.constructs.iter().filter_map(|c| match c {
            Construct::Rule(r) => Some(r),
            _ => None,
        })
    }

    pub fn facts(&self) -> impl Iterator<Item = &FactsDef> {
        self.constructs.iter().filter_map(|c| match c {
            Construct::Facts(f) => Some(f),
            _ => None,
        })
    }

    pub fn template(&self, name: &str) -> Option<&TemplateDef> {
        self.templates().find(|t| t.name == name)
    }

    pub fn rule(&self, name: &str) -> Option<&RuleDef> {
        self.rules().find(|r| r.name == name)
    }
}
