//! Canonical source text for constructs.
//!
//! The layout is fixed: three-space indentation, one conditional element or
//! action per line, `(declare ...)` only when salience is non-zero.

use std::fmt::Write;

use super::ast::*;
use crate::number::format_float;

const INDENT: &str = "   ";

pub fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

pub fn atom(a: &Atom) -> String {
    match a {
        Atom::Symbol(s) => s.clone(),
        Atom::String(s) => quote(s),
        Atom::Integer(i) => i.to_string(),
        Atom::Float(f) => format_float(*f),
    }
}

pub fn expression(e: &Expression) -> String {
    match e {
        Expression::Constant(a) => atom(a),
        Expression::Variable(v) => format!("?{v}"),
        Expression::Call { function, args } => {
            let mut out = format!("({}", function.name());
            for a in args {
                out.push(' ');
                out.push_str(&expression(a));
            }
            out.push(')');
            out
        }
    }
}

fn term(t: &Term) -> String {
    match t {
        Term::Variable(v) => format!("?{v}"),
        Term::Constant(a) => atom(a),
    }
}

fn pattern(p: &Pattern) -> String {
    let mut out = String::new();
    if let Some(b) = &p.binding {
        let _ = write!(out, "?{b} <- ");
    }
    out.push('(');
    out.push_str(&p.relation);
    match &p.body {
        PatternBody::Slots(slots) => {
            for (slot, t) in slots {
                let _ = write!(out, " ({slot} {})", term(t));
            }
        }
        PatternBody::Fields(fields) => {
            for t in fields {
                out.push(' ');
                out.push_str(&term(t));
            }
        }
    }
    out.push(')');
    out
}

fn fact(spec: &FactSpec) -> String {
    let mut out = format!("({}", spec.relation);
    match &spec.body {
        FactBody::Slots(slots) => {
            for (slot, e) in slots {
                let _ = write!(out, " ({slot} {})", expression(e));
            }
        }
        FactBody::Fields(fields) => {
            for e in fields {
                out.push(' ');
                out.push_str(&expression(e));
            }
        }
    }
    out.push(')');
    out
}

fn action(a: &Action, depth: usize, out: &mut String) {
    let pad = INDENT.repeat(depth);
    match a {
        Action::Assert(spec) => {
            let _ = write!(out, "{pad}(assert {})", fact(spec));
        }
        Action::Retract(v) => {
            let _ = write!(out, "{pad}(retract ?{v})");
        }
        Action::Printout { router, items } => {
            let _ = write!(out, "{pad}(printout {router}");
            for item in items {
                out.push(' ');
                match item {
                    PrintItem::Crlf => out.push_str("crlf"),
                    PrintItem::Expr(e) => out.push_str(&expression(e)),
                }
            }
            out.push(')');
        }
        Action::Bind { variable, value } => {
            let _ = write!(out, "{pad}(bind ?{variable} {})", expression(value));
        }
        Action::Open { path, router, mode } => {
            let _ = write!(out, "{pad}(open {} {router} {})", expression(path), quote(mode));
        }
        Action::If { condition, then, otherwise } => {
            let _ = write!(out, "{pad}(if {}\n{pad} then", expression(condition));
            for a in then {
                out.push('\n');
                action(a, depth + 1, out);
            }
            if !otherwise.is_empty() {
                let _ = write!(out, "\n{pad} else");
                for a in otherwise {
                    out.push('\n');
                    action(a, depth + 1, out);
                }
            }
            out.push(')');
        }
    }
}

fn header(out: &mut String, keyword: &str, name: &str, doc: &Option<String>) {
    let _ = write!(out, "({keyword} {name}");
    if let Some(doc) = doc {
        out.push(' ');
        out.push_str(&quote(doc));
    }
}

pub fn template(t: &TemplateDef) -> String {
    let mut out = String::new();
    header(&mut out, "deftemplate", &t.name, &t.doc);
    for slot in &t.slots {
        let _ = write!(out, "\n{INDENT}(slot {slot})");
    }
    out.push(')');
    out
}

pub fn rule(r: &RuleDef) -> String {
    let mut out = String::new();
    header(&mut out, "defrule", &r.name, &r.doc);
    if r.salience != 0 {
        let _ = write!(out, "\n{INDENT}(declare (salience {}))", r.salience);
    }
    for ce in &r.lhs {
        out.push('\n');
        out.push_str(INDENT);
        match ce {
            ConditionalElement::Pattern(p) => out.push_str(&pattern(p)),
            ConditionalElement::Test(e) => {
                let _ = write!(out, "(test {})", expression(e));
            }
        }
    }
    let _ = write!(out, "\n{INDENT}=>");
    for a in &r.rhs {
        out.push('\n');
        action(a, 1, &mut out);
    }
    out.push(')');
    out
}

pub fn facts(f: &FactsDef) -> String {
    let mut out = String::new();
    header(&mut out, "deffacts", &f.name, &f.doc);
    for spec in &f.facts {
        let _ = write!(out, "\n{INDENT}{}", fact(spec));
    }
    out.push(')');
    out
}

pub fn pretty_print(construct: &Construct) -> String {
    match construct {
        Construct::Template(t) => template(t),
        Construct::Rule(r) => rule(r),
        Construct::Facts(f) => facts(f),
    }
}

/// Pretty-prints a whole program, constructs separated by a blank line.
pub fn pretty_print_program(constructs: &[Construct]) -> String {
    let mut out = String::new();
    for (i, c) in constructs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&pretty_print(c));
        out.push('\n');
    }
    out
}
