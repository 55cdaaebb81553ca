//! Faculty admission criteria and their compilation into rules.
//!
//! Criteria files are INI-like:
//!
//! ```text
//! [Mathematics]
//! min-academic-per=60
//! academic-type=Science
//! min-hssc-year=2009
//! gate.int-test-per=80
//! gate.ability-test-math-per=80
//! ```
//!
//! The three non-gate keys are hard acceptance gates; every `gate.` key is a
//! soft recommendation gate, kept in file order.

use std::collections::HashSet;

use thiserror::Error;

use super::record::{is_plain_token, PERCENT_FIELDS};
use crate::dsl::{
    Action, Atom, ConditionalElement, Expression, FactBody, FactSpec, Function, Pattern,
    PatternBody, PrintItem, RuleDef, Term,
};
use crate::number::Number;

pub const OUTPUT_ROUTER: &str = "fdatao";
pub const MIN_YEAR: i64 = 1950;
pub const MAX_YEAR: i64 = 2100;

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    /// A student percentage slot, e.g. `ability-test-math-per`.
    pub field: String,
    pub min: Number,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacultyCriteria {
    pub faculty: String,
    pub min_academic_per: Number,
    pub academic_type: String,
    pub min_hssc_year: i64,
    pub gates: Vec<Gate>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriteriaError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("[{faculty}]: missing key `{key}`")]
    MissingKey { faculty: String, key: &'static str },
    #[error("[{faculty}]: unknown gate field `{field}`")]
    UnknownGateField { faculty: String, field: String },
    #[error("[{faculty}]: gate on `{field}` given twice")]
    DuplicateGate { faculty: String, field: String },
    #[error("[{faculty}]: `{key}` = {value} is out of range")]
    OutOfRange {
        faculty: String,
        key: String,
        value: String,
    },
    #[error("`{0}` is not a valid faculty or type name")]
    BadName(String),
    #[error("faculty `{0}` defined twice")]
    DuplicateFaculty(String),
}

fn symbol_like(text: &str) -> bool {
    is_plain_token(text) && !text.starts_with('?') && Number::parse(text).is_none()
}

impl FacultyCriteria {
    pub fn rule_name(&self) -> String {
        format!("fo-{}", self.faculty)
    }

    pub fn validate(&self) -> Result<(), CriteriaError> {
        let faculty = &self.faculty;
        if !symbol_like(faculty) || faculty.contains(['[', ']']) {
            return Err(CriteriaError::BadName(faculty.clone()));
        }
        if !symbol_like(&self.academic_type) {
            return Err(CriteriaError::BadName(self.academic_type.clone()));
        }
        let out_of_range = |key: &str, value: String| CriteriaError::OutOfRange {
            faculty: faculty.clone(),
            key: key.to_string(),
            value,
        };
        let in_percent = |n: Number| (0.0..=100.0).contains(&n.as_f64());
        if !in_percent(self.min_academic_per) {
            return Err(out_of_range("min-academic-per", self.min_academic_per.to_string()));
        }
        if !(MIN_YEAR..=MAX_YEAR).contains(&self.min_hssc_year) {
            return Err(out_of_range("min-hssc-year", self.min_hssc_year.to_string()));
        }
        let mut seen = HashSet::new();
        for gate in &self.gates {
            if !PERCENT_FIELDS.contains(&gate.field.as_str()) {
                return Err(CriteriaError::UnknownGateField {
                    faculty: faculty.clone(),
                    field: gate.field.clone(),
                });
            }
            if !seen.insert(gate.field.as_str()) {
                return Err(CriteriaError::DuplicateGate {
                    faculty: faculty.clone(),
                    field: gate.field.clone(),
                });
            }
            if !in_percent(gate.min) {
                return Err(out_of_range(&format!("gate.{}", gate.field), gate.min.to_string()));
            }
        }
        Ok(())
    }
}

fn number_atom(n: Number) -> Atom {
    match n {
        Number::Int(i) => Atom::Integer(i),
        Number::Float(f) => Atom::Float(f),
    }
}

fn at_least(field: &str, min: Number) -> Expression {
    Expression::call(
        Function::Ge,
        vec![Expression::var(field), Expression::Constant(number_atom(min))],
    )
}

fn print(items: Vec<PrintItem>) -> Action {
    Action::Printout {
        router: OUTPUT_ROUTER.to_string(),
        items,
    }
}

fn text(s: &str) -> PrintItem {
    PrintItem::Expr(Expression::Constant(Atom::String(s.to_string())))
}

/// Builds the faculty rule: one `student` pattern binding the gated slots,
/// three acceptance tests, then assert + section header + the
/// recommendation `if`.
pub fn compile_criteria(criteria: &FacultyCriteria) -> Result<RuleDef, CriteriaError> {
    criteria.validate()?;
    let faculty = &criteria.faculty;

    let mut bound = vec!["stdid", "academic-per", "academic-type", "HSSC-year"];
    bound.extend(criteria.gates.iter().map(|g| g.field.as_str()));
    let pattern = Pattern {
        binding: None,
        relation: "student".to_string(),
        body: PatternBody::Slots(
            bound
                .iter()
                .map(|s| (s.to_string(), Term::Variable(s.to_string())))
                .collect(),
        ),
    };

    let lhs = vec![
        ConditionalElement::Pattern(pattern),
        ConditionalElement::Test(at_least("academic-per", criteria.min_academic_per)),
        ConditionalElement::Test(Expression::call(
            Function::Eq,
            vec![
                Expression::var("academic-type"),
                Expression::Constant(Atom::symbol(&criteria.academic_type)),
            ],
        )),
        ConditionalElement::Test(at_least("HSSC-year", Number::Int(criteria.min_hssc_year))),
    ];

    let mut gates: Vec<Expression> = criteria
        .gates
        .iter()
        .map(|g| at_least(&g.field, g.min))
        .collect();
    let condition = match gates.len() {
        0 => Expression::Constant(Atom::symbol(crate::engine::TRUE)),
        1 => gates.remove(0),
        _ => Expression::call(Function::And, gates),
    };

    let rhs = vec![
        Action::Assert(FactSpec {
            relation: format!("faculty-of-{faculty}"),
            body: FactBody::Fields(vec![Expression::var("stdid")]),
        }),
        print(vec![
            text(&format!("[{faculty}]")),
            PrintItem::Crlf,
            text("Accepted=TRUE"),
            PrintItem::Crlf,
        ]),
        Action::If {
            condition,
            then: vec![print(vec![text("Recommended=TRUE"), PrintItem::Crlf, PrintItem::Crlf])],
            otherwise: vec![print(vec![text("Recommended=FALSE"), PrintItem::Crlf, PrintItem::Crlf])],
        },
    ];

    Ok(RuleDef {
        name: criteria.rule_name(),
        doc: None,
        salience: 0,
        lhs,
        rhs,
        pos: Default::default(),
    })
}

const KEYS: [&str; 3] = ["min-academic-per", "academic-type", "min-hssc-year"];

#[derive(Default)]
struct Section {
    name: String,
    line: usize,
    min_academic_per: Option<Number>,
    academic_type: Option<String>,
    min_hssc_year: Option<i64>,
    gates: Vec<Gate>,
}

impl Section {
    fn finish(self) -> Result<FacultyCriteria, CriteriaError> {
        let missing = |key| CriteriaError::MissingKey {
            faculty: self.name.clone(),
            key,
        };
        Ok(FacultyCriteria {
            min_academic_per: self.min_academic_per.ok_or_else(|| missing(KEYS[0]))?,
            academic_type: self.academic_type.clone().ok_or_else(|| missing(KEYS[1]))?,
            min_hssc_year: self.min_hssc_year.ok_or_else(|| missing(KEYS[2]))?,
            faculty: self.name,
            gates: self.gates,
        })
    }
}

/// Parses a criteria file. Only syntax and value types are checked here;
/// [`FacultyCriteria::validate`] covers field names and ranges.
pub fn parse_criteria(text: &str) -> Result<Vec<FacultyCriteria>, CriteriaError> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') || line.starts_with('#') {
            continue;
        }
        let syntax = |message: String| CriteriaError::Syntax { line: line_no, message };
        if let Some(header) = line.strip_prefix('[') {
            let name = header
                .strip_suffix(']')
                .ok_or_else(|| syntax("unterminated section header".into()))?
                .trim();
            if sections.iter().any(|s| s.name == name) {
                return Err(CriteriaError::DuplicateFaculty(name.to_string()));
            }
            sections.push(Section {
                name: name.to_string(),
                line: line_no,
                ..Default::default()
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| syntax(format!("expected `key=value`, found {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let section = sections
            .last_mut()
            .ok_or_else(|| syntax("key before the first [section]".into()))?;
        let number = |v: &str| {
            Number::parse(v).ok_or_else(|| syntax(format!("`{key}` needs a number, found {v:?}")))
        };
        let duplicate = || syntax(format!("`{key}` given twice in [{}]", section.name));
        match key {
            "min-academic-per" => {
                if section.min_academic_per.replace(number(value)?).is_some() {
                    return Err(duplicate());
                }
            }
            "academic-type" => {
                if section.academic_type.replace(value.to_string()).is_some() {
                    return Err(duplicate());
                }
            }
            "min-hssc-year" => {
                let year = value
                    .parse::<i64>()
                    .map_err(|_| syntax(format!("`{key}` needs an integer year, found {value:?}")))?;
                if section.min_hssc_year.replace(year).is_some() {
                    return Err(duplicate());
                }
            }
            _ => match key.strip_prefix("gate.") {
                Some(field) if !field.is_empty() => section.gates.push(Gate {
                    field: field.to_string(),
                    min: number(value)?,
                }),
                _ => return Err(syntax(format!("unknown key `{key}`"))),
            },
        }
    }
    sections.sort_by_key(|s| s.line);
    sections.into_iter().map(Section::finish).collect()
}
