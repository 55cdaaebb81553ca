//! Working memory, agenda and the recognize-act loop.
//!
//! Matching is naive and incremental: each assert enumerates only the fact
//! tuples that contain the new fact, so every (rule, tuple) pair is
//! considered exactly once over a session. Fact ids are never reused, which
//! together with that gives refraction for free.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::eval::{eval, Bindings};
use super::router::{Routers, SessionIo};
use super::value::{FactId, Value};
use super::{EngineError, RunError};
use crate::dsl::{
    Action, ConditionalElement, FactBody, FactSpec, Pattern, PatternBody, PrintItem, Program,
    RuleDef, Term, INITIAL_FACT,
};

#[derive(Debug, Clone, PartialEq)]
pub enum FactData {
    /// Slot values in template slot order; unset slots hold [`Value::Nil`].
    Slots(Vec<Value>),
    /// Positional fields of an ordered fact.
    Fields(Vec<Value>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fact {
    pub id: FactId,
    pub relation: String,
    pub data: FactData,
}

impl Fact {
    /// Values in slot or field order.
    pub fn values(&self) -> &[Value] {
        match &self.data {
            FactData::Slots(v) | FactData::Fields(v) => v,
        }
    }
}

/// A fact to assert, before slot names are resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum FactInput {
    Template { template: String, slots: Vec<(String, Value)> },
    Ordered { relation: String, fields: Vec<Value> },
}

impl FactInput {
    pub fn ordered(relation: impl Into<String>, fields: Vec<Value>) -> Self {
        FactInput::Ordered { relation: relation.into(), fields }
    }

    pub fn template<S: Into<String>>(template: impl Into<String>, slots: Vec<(S, Value)>) -> Self {
        FactInput::Template {
            template: template.into(),
            slots: slots.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssertOutcome {
    Asserted(FactId),
    /// An identical fact already exists; nothing changed.
    Duplicate(FactId),
}

impl AssertOutcome {
    pub fn id(self) -> FactId {
        match self {
            AssertOutcome::Asserted(id) | AssertOutcome::Duplicate(id) => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Activation {
    pub rule: String,
    pub bindings: Bindings,
    pub fact_ids: Vec<FactId>,
    pub salience: i64,
    /// Creation sequence number; higher is more recent.
    pub recency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub rule: String,
    pub fact_ids: Vec<FactId>,
    pub salience: i64,
    pub recency: u64,
}

/// One forward-chaining session over a validated program.
#[derive(Debug)]
pub struct Session {
    program: Arc<Program>,
    facts: BTreeMap<FactId, Fact>,
    next_fact: u64,
    agenda: BTreeMap<(i64, u64), Activation>,
    next_recency: u64,
    routers: Routers,
    fired: Vec<Firing>,
    asserted: usize,
    retracted: usize,
}

impl Session {
    /// Fresh working memory holding `(initial-fact)` as fact 0, followed by
    /// every `deffacts` entry in program order.
    pub fn reset(program: Arc<Program>, io: SessionIo) -> Result<Self, EngineError> {
        let mut session = Session {
            program,
            facts: BTreeMap::new(),
            next_fact: 0,
            agenda: BTreeMap::new(),
            next_recency: 0,
            routers: Routers::new(io),
            fired: Vec::new(),
            asserted: 0,
            retracted: 0,
        };
        session.assert_fact(FactInput::ordered(INITIAL_FACT, vec![]))?;
        let program = Arc::clone(&session.program);
        let empty = Bindings::new();
        for def in program.facts() {
            for spec in &def.facts {
                let input = session.evaluate_fact(spec, &empty)?;
                session.assert_fact(input)?;
            }
        }
        Ok(session)
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.values()
    }

    pub fn fact(&self, id: FactId) -> Option<&Fact> {
        self.facts.get(&id)
    }

    /// Activations in the order they would fire.
    pub fn agenda(&self) -> Vec<&Activation> {
        self.agenda.values().rev().collect()
    }

    pub fn fired(&self) -> &[Firing] {
        &self.fired
    }

    /// Successful (non-duplicate) asserts since reset, including the initial fact.
    pub fn assert_count(&self) -> usize {
        self.asserted
    }

    pub fn retract_count(&self) -> usize {
        self.retracted
    }

    /// Contents of an in-memory file after its router was closed.
    pub fn file(&self, path: &str) -> Option<&[u8]> {
        self.routers.file(path)
    }

    pub fn stdout(&self) -> &[u8] {
        self.routers.captured_stdout()
    }

    pub fn router_open(&self, name: &str) -> bool {
        self.routers.is_open(name)
    }

    fn resolve(&self, input: FactInput) -> Result<(String, FactData), EngineError> {
        let program = &self.program;
        match input {
            FactInput::Template { template, slots } => {
                let def = program
                    .template(&template)
                    .ok_or_else(|| EngineError::UnknownTemplate(template.clone()))?;
                let mut values = vec![Value::Nil; def.slots.len()];
                for (slot, value) in slots {
                    let idx = def.slots.iter().position(|s| *s == slot).ok_or_else(|| {
                        EngineError::UnknownSlot {
                            template: template.clone(),
                            slot: slot.clone(),
                        }
                    })?;
                    values[idx] = value;
                }
                Ok((template, FactData::Slots(values)))
            }
            FactInput::Ordered { relation, fields } => match program.template(&relation) {
                Some(def) if fields.is_empty() => {
                    Ok((relation, FactData::Slots(vec![Value::Nil; def.slots.len()])))
                }
                Some(_) => Err(EngineError::OrderedTemplateFact(relation)),
                None => Ok((relation, FactData::Fields(fields))),
            },
        }
    }

    /// Adds a fact unless an identical one exists, then queues every new
    /// activation it completes.
    pub fn assert_fact(&mut self, input: FactInput) -> Result<AssertOutcome, EngineError> {
        let (relation, data) = self.resolve(input)?;
        let values = match &data {
            FactData::Slots(v) | FactData::Fields(v) => v,
        };
        if values.iter().any(|v| matches!(v, Value::Eof)) {
            return Err(EngineError::EofInFact(relation));
        }
        if let Some(existing) = self
            .facts
            .values()
            .find(|f| f.relation == relation && f.data == data)
        {
            return Ok(AssertOutcome::Duplicate(existing.id));
        }
        let id = FactId(self.next_fact);
        self.next_fact += 1;
        self.asserted += 1;
        self.facts.insert(id, Fact { id, relation, data });

        let program = Arc::clone(&self.program);
        for rule in program.rules() {
            let mut tuple = Vec::new();
            if rule.patterns().next().is_none() {
                // As in CLIPS, a rule without patterns hangs off (initial-fact).
                match self.facts.get(&id) {
                    Some(f) if f.relation == INITIAL_FACT => tuple.push(id),
                    _ => continue,
                }
            }
            let mut found = Vec::new();
            let mut matcher = Matcher {
                facts: &self.facts,
                program: &program,
                routers: &mut self.routers,
                required: Some(id),
                out: &mut found,
            };
            matcher.extend(rule, 0, &mut Bindings::new(), &mut tuple)?;
            for (bindings, fact_ids) in found {
                let recency = self.next_recency;
                self.next_recency += 1;
                self.agenda.insert(
                    (rule.salience, recency),
                    Activation {
                        rule: rule.name.clone(),
                        bindings,
                        fact_ids,
                        salience: rule.salience,
                        recency,
                    },
                );
            }
        }
        Ok(AssertOutcome::Asserted(id))
    }

    /// Removes a fact and every activation that depends on it.
    pub fn retract_fact(&mut self, id: FactId) -> Result<(), EngineError> {
        if self.facts.remove(&id).is_none() {
            return Err(EngineError::UnknownFact(id));
        }
        self.retracted += 1;
        self.agenda.retain(|_, a| !a.fact_ids.contains(&id));
        Ok(())
    }

    /// Fires activations until the agenda is empty or `max_fires` is reached,
    /// returning the number fired. Routers are flushed and closed once the
    /// agenda drains or an action fails.
    pub fn run(&mut self, max_fires: Option<usize>) -> Result<usize, RunError> {
        let mut count = 0;
        while max_fires.is_none_or(|m| count < m) {
            let Some((_, activation)) = self.agenda.pop_last() else {
                break;
            };
            self.fired.push(Firing {
                rule: activation.rule.clone(),
                fact_ids: activation.fact_ids.clone(),
                salience: activation.salience,
                recency: activation.recency,
            });
            count += 1;
            if let Err(error) = self.fire(&activation) {
                let _ = self.routers.close_all();
                return Err(RunError {
                    rule: activation.rule,
                    fires: count,
                    error,
                });
            }
        }
        if self.agenda.is_empty() {
            self.routers.close_all().map_err(|error| RunError {
                rule: String::new(),
                fires: count,
                error,
            })?;
        }
        Ok(count)
    }

    fn fire(&mut self, activation: &Activation) -> Result<(), EngineError> {
        let program = Arc::clone(&self.program);
        let rule = program
            .rule(&activation.rule)
            .expect("activation refers to a program rule");
        let mut bindings = activation.bindings.clone();
        self.execute(&rule.rhs, &mut bindings)
    }

    fn evaluate_fact(&mut self, spec: &FactSpec, bindings: &Bindings) -> Result<FactInput, EngineError> {
        Ok(match &spec.body {
            FactBody::Slots(slots) => FactInput::Template {
                template: spec.relation.clone(),
                slots: slots
                    .iter()
                    .map(|(k, e)| Ok((k.clone(), eval(e, bindings, &mut self.routers)?)))
                    .collect::<Result<_, EngineError>>()?,
            },
            FactBody::Fields(fields) => FactInput::Ordered {
                relation: spec.relation.clone(),
                fields: fields
                    .iter()
                    .map(|e| eval(e, bindings, &mut self.routers))
                    .collect::<Result<_, _>>()?,
            },
        })
    }

    fn execute(&mut self, actions: &[Action], bindings: &mut Bindings) -> Result<(), EngineError> {
        for action in actions {
            match action {
                Action::Assert(spec) => {
                    let input = self.evaluate_fact(spec, bindings)?;
                    self.assert_fact(input)?;
                }
                Action::Retract(var) => match bindings.get(var) {
                    Some(Value::Fact(id)) => self.retract_fact(*id)?,
                    Some(other) => {
                        return Err(EngineError::NotAFact {
                            variable: var.clone(),
                            value: other.to_string(),
                        })
                    }
                    None => return Err(EngineError::UnboundVariable(var.clone())),
                },
                Action::Printout { router, items } => {
                    let mut bytes = Vec::new();
                    for item in items {
                        match item {
                            PrintItem::Crlf => bytes.extend_from_slice(b"\r\n"),
                            PrintItem::Expr(e) => {
                                let v = eval(e, bindings, &mut self.routers)?;
                                bytes.extend_from_slice(v.printed().as_bytes());
                            }
                        }
                    }
                    self.routers.write(router, &bytes)?;
                }
                Action::Bind { variable, value } => {
                    let v = eval(value, bindings, &mut self.routers)?;
                    bindings.insert(variable.clone(), v);
                }
                Action::Open { path, router, mode } => {
                    let path = match eval(path, bindings, &mut self.routers)? {
                        Value::String(s) | Value::Symbol(s) => s,
                        other => {
                            return Err(EngineError::InvalidPath(other.to_string()));
                        }
                    };
                    self.routers.open(&path, router, mode)?;
                }
                Action::If { condition, then, otherwise } => {
                    let branch = if eval(condition, bindings, &mut self.routers)?.is_truthy() {
                        then
                    } else {
                        otherwise
                    };
                    self.execute(branch, bindings)?;
                }
            }
        }
        Ok(())
    }
}

/// Enumerates LHS matches. With `required` set, only tuples containing that
/// fact are produced.
struct Matcher<'a> {
    facts: &'a BTreeMap<FactId, Fact>,
    program: &'a Program,
    routers: &'a mut Routers,
    required: Option<FactId>,
    out: &'a mut Vec<(Bindings, Vec<FactId>)>,
}

impl Matcher<'_> {
    fn extend(
        &mut self,
        rule: &RuleDef,
        ce: usize,
        bindings: &mut Bindings,
        tuple: &mut Vec<FactId>,
    ) -> Result<(), EngineError> {
        let Some(element) = rule.lhs.get(ce) else {
            if self.required.is_none_or(|id| tuple.contains(&id)) {
                self.out.push((bindings.clone(), tuple.clone()));
            }
            return Ok(());
        };
        match element {
            ConditionalElement::Test(expr) => {
                if eval(expr, bindings, self.routers)?.is_truthy() {
                    self.extend(rule, ce + 1, bindings, tuple)?;
                }
            }
            ConditionalElement::Pattern(pattern) => {
                let facts = self.facts;
                for fact in facts.values().filter(|f| f.relation == pattern.relation) {
                    let mut local = bindings.clone();
                    if self.match_pattern(pattern, fact, &mut local) {
                        tuple.push(fact.id);
                        self.extend(rule, ce + 1, &mut local, tuple)?;
                        tuple.pop();
                    }
                }
            }
        }
        Ok(())
    }

    fn match_pattern(&self, pattern: &Pattern, fact: &Fact, bindings: &mut Bindings) -> bool {
        let ok = match (&pattern.body, &fact.data) {
            (PatternBody::Fields(terms), FactData::Slots(_)) => terms.is_empty(),
            (PatternBody::Fields(terms), FactData::Fields(values)) => {
                terms.len() == values.len()
                    && terms.iter().zip(values).all(|(t, v)| unify(t, v, bindings))
            }
            (PatternBody::Slots(slots), FactData::Slots(values)) => {
                let Some(template) = self.program.template(&fact.relation) else {
                    return false;
                };
                slots.iter().all(|(slot, term)| {
                    template
                        .slots
                        .iter()
                        .position(|s| s == slot)
                        .is_some_and(|idx| unify(term, &values[idx], bindings))
                })
            }
            (PatternBody::Slots(_), FactData::Fields(_)) => false,
        };
        if ok {
            if let Some(name) = &pattern.binding {
                bindings.insert(name.clone(), Value::Fact(fact.id));
            }
        }
        ok
    }
}

fn unify(term: &Term, value: &Value, bindings: &mut Bindings) -> bool {
    match term {
        Term::Constant(atom) => Value::from(atom).matches(value),
        Term::Variable(name) => match bindings.get(name) {
            Some(bound) => bound.matches(value),
            None => {
                bindings.insert(name.clone(), value.clone());
                true
            }
        },
    }
}
