//! Oracles and generators shared by the integration tests. The CLI
//! acceptance suite includes this file by path, so it only depends on
//! `dss_core`, `rand`, `rand_chacha` and `chrono`.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use dss_core::dsl::{parse_source, Program};
use dss_core::engine::{FactId, FactInput, Session, SessionIo, Value};
use dss_core::kb::{FacultyCriteria, Gate, StudentRecord};
use dss_core::Number;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn golden_in() -> Vec<u8> {
    std::fs::read(fixtures().join("golden/boundary-student.std-data-in.txt")).unwrap()
}

pub fn golden_out() -> Vec<u8> {
    std::fs::read(fixtures().join("golden/boundary-student.std-data-out.txt")).unwrap()
}

/// Every threshold met exactly.
pub fn boundary_student() -> StudentRecord {
    StudentRecord {
        stdid: 1,
        name: "Ali".into(),
        age: 19,
        academic_per: Number::Int(60),
        academic_type: "Science".into(),
        hssc_year: 2009,
        int_test_per: Number::Int(80),
        eng: Number::Int(60),
        phy: Number::Int(60),
        che: Number::Int(60),
        cs: Number::Int(0),
        math: Number::Int(80),
        bio: Number::Int(0),
    }
}

/// The Mathematics constants, written out by hand.
pub fn mathematics() -> FacultyCriteria {
    let gate = |field: &str, min: i64| Gate {
        field: field.into(),
        min: Number::Int(min),
    };
    FacultyCriteria {
        faculty: "Mathematics".into(),
        min_academic_per: Number::Int(60),
        academic_type: "Science".into(),
        min_hssc_year: 2009,
        gates: vec![
            gate("int-test-per", 80),
            gate("ability-test-math-per", 80),
            gate("ability-test-eng-per", 60),
            gate("ability-test-phy-per", 60),
            gate("ability-test-che-per", 60),
        ],
    }
}

fn field_value(r: &StudentRecord, field: &str) -> f64 {
    let n = match field {
        "int-test-per" => r.int_test_per,
        "ability-test-eng-per" => r.eng,
        "ability-test-phy-per" => r.phy,
        "ability-test-che-per" => r.che,
        "ability-test-cs-per" => r.cs,
        "ability-test-math-per" => r.math,
        "ability-test-bio-per" => r.bio,
        other => panic!("not a percentage field: {other}"),
    };
    n.as_f64()
}

/// Direct evaluation of a faculty's gates: `None` if not accepted,
/// otherwise whether it is recommended.
pub fn oracle_verdict(c: &FacultyCriteria, r: &StudentRecord) -> Option<bool> {
    let accepted = r.academic_per.as_f64() >= c.min_academic_per.as_f64()
        && r.academic_type == c.academic_type
        && r.hssc_year >= c.min_hssc_year;
    accepted.then(|| c.gates.iter().all(|g| field_value(r, &g.field) >= g.min.as_f64()))
}

/// The eight Mathematics thresholds; bit i of `mask` set puts threshold i
/// one below its value (for the type: a different type).
pub fn matrix_record(mask: u8) -> StudentRecord {
    let mut r = boundary_student();
    let below = |bit: u8| mask & (1 << bit) != 0;
    if below(0) {
        r.academic_per = Number::Int(59);
    }
    if below(1) {
        r.academic_type = "Arts".into();
    }
    if below(2) {
        r.hssc_year = 2008;
    }
    if below(3) {
        r.int_test_per = Number::Int(79);
    }
    if below(4) {
        r.math = Number::Int(79);
    }
    if below(5) {
        r.eng = Number::Int(59);
    }
    if below(6) {
        r.phy = Number::Int(59);
    }
    if below(7) {
        r.che = Number::Int(59);
    }
    r
}

const NAMES: [&str; 8] = ["Ali", "Sara", "Bilal", "Ayesha", "Omar", "Hina", "Zain", "Fatima_Noor"];
const TYPES: [&str; 3] = ["Science", "Arts", "Commerce"];

/// A percentage clustered around the usual thresholds, sometimes fractional.
pub fn random_percent<R: Rng>(rng: &mut R) -> Number {
    match rng.gen_range(0..4) {
        0 => Number::Int(*[59, 60, 61, 79, 80, 81].choose(rng).unwrap()),
        1 => Number::Float(rng.gen_range(0..=200) as f64 / 2.0),
        _ => Number::Int(rng.gen_range(0..=100)),
    }
}

pub fn random_student<R: Rng>(rng: &mut R) -> StudentRecord {
    StudentRecord {
        stdid: rng.gen_range(1..100_000),
        name: NAMES.choose(rng).unwrap().to_string(),
        age: rng.gen_range(15..40),
        academic_per: random_percent(rng),
        academic_type: if rng.gen_bool(0.7) { "Science" } else { TYPES.choose(rng).unwrap() }.into(),
        hssc_year: rng.gen_range(2005..2013),
        int_test_per: random_percent(rng),
        eng: random_percent(rng),
        phy: random_percent(rng),
        che: random_percent(rng),
        cs: random_percent(rng),
        math: random_percent(rng),
        bio: random_percent(rng),
    }
}

/// Fields a single-field increase may touch.
pub const RAISABLE: [&str; 8] = [
    "academic-per",
    "int-test-per",
    "ability-test-eng-per",
    "ability-test-phy-per",
    "ability-test-che-per",
    "ability-test-cs-per",
    "ability-test-math-per",
    "ability-test-bio-per",
];

/// Raises one field by `by`, capped at 100.
pub fn raise(r: &mut StudentRecord, field: &str, by: f64) {
    let slot = if field == "academic-per" {
        &mut r.academic_per
    } else {
        r.percent_mut(field).unwrap()
    };
    *slot = match *slot {
        Number::Int(i) if by.fract() == 0.0 => Number::Int((i + by as i64).min(100)),
        n => Number::Float((n.as_f64() + by).min(100.0)),
    };
}

// ---------------------------------------------------------------------------
// Small random programs over ordered facts `(rel sym n)` and a brute-force
// matcher for them.

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum OVal {
    Sym(String),
    Int(i64),
}

#[derive(Debug, Clone)]
pub enum GenTerm {
    Var(String),
    Const(OVal),
}

#[derive(Debug, Clone)]
pub struct GenPattern {
    pub relation: String,
    pub terms: Vec<GenTerm>,
}

#[derive(Debug, Clone)]
pub enum GenTest {
    Gt(String, i64),
    Eq(String, String),
}

#[derive(Debug, Clone)]
pub struct GenRule {
    pub name: String,
    pub salience: i64,
    pub patterns: Vec<GenPattern>,
    pub tests: Vec<GenTest>,
}

#[derive(Debug, Clone)]
pub struct GenCase {
    pub rules: Vec<GenRule>,
    /// `(relation symbol integer)`; may contain duplicates.
    pub facts: Vec<(String, OVal, OVal)>,
}

const RELATIONS: [&str; 3] = ["a", "b", "c"];
const SYMS: [&str; 2] = ["x", "y"];

fn term_src(t: &GenTerm) -> String {
    match t {
        GenTerm::Var(v) => format!("?{v}"),
        GenTerm::Const(OVal::Sym(s)) => s.clone(),
        GenTerm::Const(OVal::Int(i)) => i.to_string(),
    }
}

impl GenRule {
    pub fn source(&self) -> String {
        let mut out = format!("(defrule {}", self.name);
        if self.salience != 0 {
            out.push_str(&format!(" (declare (salience {}))", self.salience));
        }
        for p in &self.patterns {
            let terms: Vec<String> = p.terms.iter().map(term_src).collect();
            out.push_str(&format!(" ({} {})", p.relation, terms.join(" ")));
        }
        for t in &self.tests {
            match t {
                GenTest::Gt(v, k) => out.push_str(&format!(" (test (> ?{v} {k}))")),
                GenTest::Eq(a, b) => out.push_str(&format!(" (test (eq ?{a} ?{b}))")),
            }
        }
        out.push_str(" =>)");
        out
    }
}

impl GenCase {
    pub fn source(&self) -> String {
        self.rules.iter().map(GenRule::source).collect::<Vec<_>>().join("\n")
    }

    pub fn random<R: Rng>(rng: &mut R) -> GenCase {
        let n_rules = rng.gen_range(1..=3);
        let rules = (0..n_rules)
            .map(|i| {
                let n_patterns = rng.gen_range(1..=2);
                let mut sym_vars: Vec<String> = Vec::new();
                let mut num_vars: Vec<String> = Vec::new();
                let mut patterns = Vec::new();
                for _ in 0..n_patterns {
                    let sym = match rng.gen_range(0..3) {
                        0 => GenTerm::Const(OVal::Sym(SYMS.choose(rng).unwrap().to_string())),
                        1 if !sym_vars.is_empty() => GenTerm::Var(sym_vars.choose(rng).unwrap().clone()),
                        _ => {
                            let v = format!("s{}", sym_vars.len());
                            sym_vars.push(v.clone());
                            GenTerm::Var(v)
                        }
                    };
                    let num = match rng.gen_range(0..3) {
                        0 => GenTerm::Const(OVal::Int(rng.gen_range(0..3))),
                        1 if !num_vars.is_empty() => GenTerm::Var(num_vars.choose(rng).unwrap().clone()),
                        _ => {
                            let v = format!("n{}", num_vars.len());
                            num_vars.push(v.clone());
                            GenTerm::Var(v)
                        }
                    };
                    let mut terms = vec![sym, num];
                    // Occasionally a pattern of the wrong length, which never matches.
                    if rng.gen_ratio(1, 10) {
                        terms.push(GenTerm::Const(OVal::Int(0)));
                    }
                    patterns.push(GenPattern {
                        relation: RELATIONS.choose(rng).unwrap().to_string(),
                        terms,
                    });
                }
                let mut tests = Vec::new();
                if !num_vars.is_empty() && rng.gen_bool(0.4) {
                    tests.push(GenTest::Gt(num_vars.choose(rng).unwrap().clone(), rng.gen_range(0..3)));
                }
                if !sym_vars.is_empty() && rng.gen_bool(0.3) {
                    let a = sym_vars.choose(rng).unwrap().clone();
                    let b = sym_vars.choose(rng).unwrap().clone();
                    tests.push(GenTest::Eq(a, b));
                }
                GenRule {
                    name: format!("r{i}"),
                    salience: rng.gen_range(-1..=1),
                    patterns,
                    tests,
                }
            })
            .collect();
        let n_facts = rng.gen_range(0..=4);
        let facts = (0..n_facts)
            .map(|_| {
                (
                    RELATIONS.choose(rng).unwrap().to_string(),
                    OVal::Sym(SYMS.choose(rng).unwrap().to_string()),
                    OVal::Int(rng.gen_range(0..3)),
                )
            })
            .collect();
        GenCase { rules, facts }
    }

    /// Distinct facts with the ids a fresh session gives them (0 is
    /// `(initial-fact)`).
    pub fn numbered_facts(&self) -> Vec<(u64, &(String, OVal, OVal))> {
        let mut seen = Vec::new();
        let mut out = Vec::new();
        for f in &self.facts {
            if !seen.contains(&f) {
                seen.push(f);
                out.push((out.len() as u64 + 1, f));
            }
        }
        out
    }
}

fn unify(t: &GenTerm, v: &OVal, b: &mut BTreeMap<String, OVal>) -> bool {
    match t {
        GenTerm::Const(c) => c == v,
        GenTerm::Var(name) => match b.get(name) {
            Some(bound) => bound == v,
            None => {
                b.insert(name.clone(), v.clone());
                true
            }
        },
    }
}

/// Every (rule, fact-id tuple) whose LHS holds, found by trying all tuples.
pub fn brute_force_activations(
    rules: &[GenRule],
    facts: &[(u64, &(String, OVal, OVal))],
) -> BTreeSet<(String, Vec<u64>)> {
    let mut out = BTreeSet::new();
    for rule in rules {
        let k = rule.patterns.len();
        let total = facts.len().pow(k as u32);
        for mut code in 0..total {
            let mut tuple = Vec::with_capacity(k);
            for _ in 0..k {
                tuple.push(&facts[code % facts.len()]);
                code /= facts.len();
            }
            let mut b = BTreeMap::new();
            let lhs_holds = rule.patterns.iter().zip(&tuple).all(|(p, (_, (rel, s, n)))| {
                p.relation == *rel
                    && p.terms.len() == 2
                    && unify(&p.terms[0], s, &mut b)
                    && unify(&p.terms[1], n, &mut b)
            });
            let tests_hold = lhs_holds
                && rule.tests.iter().all(|t| match t {
                    GenTest::Gt(v, k) => matches!(b[v], OVal::Int(n) if n > *k),
                    GenTest::Eq(x, y) => b[x] == b[y],
                });
            if tests_hold {
                out.insert((rule.name.clone(), tuple.iter().map(|(id, _)| *id).collect()));
            }
        }
    }
    out
}

/// Loads the case's rules and asserts its facts in order.
pub fn run_case(case: &GenCase) -> (Session, Vec<FactId>) {
    let program = Arc::new(Program::new(parse_source(&case.source()).unwrap()).unwrap());
    let mut s = Session::reset(program, SessionIo::memory()).unwrap();
    let ids = case
        .facts
        .iter()
        .map(|(rel, sym, n)| {
            let v = |o: &OVal| match o {
                OVal::Sym(s) => Value::symbol(s.clone()),
                OVal::Int(i) => Value::Integer(*i),
            };
            s.assert_fact(FactInput::ordered(rel.clone(), vec![v(sym), v(n)])).unwrap().id()
        })
        .collect();
    (s, ids)
}

pub fn agenda_set(s: &Session) -> BTreeSet<(String, Vec<u64>)> {
    s.agenda()
        .iter()
        .map(|a| (a.rule.clone(), a.fact_ids.iter().map(|id| id.0).collect()))
        .collect()
}

// ---------------------------------------------------------------------------
// Answer sheets.

use chrono::{DateTime, TimeDelta, TimeZone, Utc};
use dss_core::assessment::{
    start_session, AssessmentError, Background, Phase, QuestionBank, ScienceGroup, SessionState, Subject,
    TestPlan,
};

pub fn fixture_bank() -> QuestionBank {
    QuestionBank::load(&fixtures().join("question-bank.txt")).unwrap()
}

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 9, 1, 9, 0, 0).unwrap()
}

pub fn background() -> Background {
    Background {
        stdid: 3,
        name: "Hina".into(),
        age: 18,
        academic_per: Number::Float(71.5),
        academic_type: "Science".into(),
        hssc_year: 2010,
    }
}

/// Drives one random sheet through a session (right, wrong or skipped per
/// question, replays, and a late answer whenever a phase is left to time
/// out) and checks the final percentages against a tally kept here.
pub fn check_random_sheet(bank: &QuestionBank, seed: u64) -> Result<(), String> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let group = if rng.gen_bool(0.5) { ScienceGroup::ComputerScience } else { ScienceGroup::Biology };
    let plan = TestPlan::default();
    let mut s = start_session("sheet", &background(), group, bank, &plan, rng.gen(), t0())
        .map_err(|e| e.to_string())?;
    if s.ability_questions.len() != 100 || s.intelligence_questions.len() != 50 {
        return Err(format!("drew {}/{}", s.ability_questions.len(), s.intelligence_questions.len()));
    }
    let mut tally: BTreeMap<Subject, (usize, usize)> = BTreeMap::new();
    let mut phase_start = t0();
    for (phase, ids, secs) in [
        (Phase::Ability, s.ability_questions.clone(), plan.ability_seconds),
        (Phase::Intelligence, s.intelligence_questions.clone(), plan.intelligence_seconds),
    ] {
        let deadline = phase_start + TimeDelta::seconds(secs);
        let at = phase_start + TimeDelta::seconds(rng.gen_range(0..=secs));
        let mut last_answered = false;
        for (i, id) in ids.iter().enumerate() {
            let q = bank.get(id).unwrap();
            let entry = tally.entry(q.subject).or_default();
            entry.1 += 1;
            last_answered = true;
            match rng.gen_range(0..3) {
                0 => {
                    entry.0 += 1;
                    s.submit_answer(bank, id, q.correct_index, at).map_err(|e| e.to_string())?;
                    if i + 1 < ids.len() && rng.gen_ratio(1, 10) {
                        // Replaying the same answer changes nothing.
                        let before = s.scores(bank);
                        s.submit_answer(bank, id, q.correct_index, at).map_err(|e| e.to_string())?;
                        if s.scores(bank) != before {
                            return Err("replay changed scores".into());
                        }
                    }
                }
                1 => {
                    let wrong = (q.correct_index + rng.gen_range(1..q.choices.len())) % q.choices.len();
                    s.submit_answer(bank, id, wrong, at).map_err(|e| e.to_string())?;
                }
                _ => last_answered = false,
            }
        }
        if s.phase == phase && !s.is_complete() {
            if last_answered {
                return Err("phase did not end on its last answer".into());
            }
            // Time runs out; a late right answer must be refused.
            let before = s.scores(bank);
            let late = ids.iter().find(|id| !s.answers.contains_key(*id)).unwrap();
            let q = bank.get(late).unwrap();
            match s.submit_answer(bank, late, q.correct_index, deadline + TimeDelta::seconds(1)) {
                Err(AssessmentError::DeadlineExpired { .. }) => {}
                other => return Err(format!("late answer gave {other:?}")),
            }
            if s.scores(bank) != before {
                return Err("late answer changed scores".into());
            }
            phase_start = deadline;
        } else {
            phase_start = at;
        }
    }
    let (_, scores) = s.finalize(bank, t0() + TimeDelta::hours(3)).map_err(|e| e.to_string())?;
    for subject in Subject::ALL {
        let expected = match tally.get(&subject) {
            Some(&(right, count)) => 100.0 * right as f64 / count as f64,
            None => 0.0,
        };
        let count = tally.get(&subject).map_or(0, |t| t.1);
        let want_count = match subject {
            Subject::Intelligence => 50,
            s if s == group.subject() || !matches!(s, Subject::ComputerScience | Subject::Biology) => 20,
            _ => 0,
        };
        if count != want_count {
            return Err(format!("{subject}: {count} questions drawn"));
        }
        if scores.get(subject) != expected {
            return Err(format!("{subject}: got {}, expected {expected}", scores.get(subject)));
        }
    }
    Ok(())
}

pub fn finished_session(bank: &QuestionBank) -> SessionState {
    let mut s = start_session("done", &background(), ScienceGroup::Biology, bank, &TestPlan::default(), 1, t0())
        .unwrap();
    s.finalize(bank, t0() + TimeDelta::hours(2)).unwrap();
    s
}
