mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::{agenda_set, brute_force_activations, run_case, GenCase, OVal};
use dss_core::dsl::{parse_source, Program};
use dss_core::engine::{AssertOutcome, EngineError, FactId, FactInput, Session, SessionIo, Value};
use dss_core::kb;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn program(src: &str) -> Arc<Program> {
    Arc::new(Program::new(parse_source(src).unwrap()).unwrap())
}

fn session(src: &str) -> Session {
    Session::reset(program(src), SessionIo::memory()).unwrap()
}

fn student_slots(academic_per: i64, academic_type: &str, year: i64) -> FactInput {
    FactInput::template(
        "student",
        vec![
            ("stdid", Value::Integer(1)),
            ("name", Value::symbol("Ali")),
            ("academic-per", Value::Integer(academic_per)),
            ("academic-type", Value::symbol(academic_type)),
            ("HSSC-year", Value::Integer(year)),
            ("int-test-per", Value::Integer(50)),
            ("ability-test-math-per", Value::Integer(50)),
            ("ability-test-eng-per", Value::Integer(50)),
            ("ability-test-phy-per", Value::Integer(50)),
            ("ability-test-che-per", Value::Integer(50)),
        ],
    )
}

/// The shipped KB; its loader activation sits on the agenda unfired.
fn math_session() -> Session {
    Session::reset(Arc::new(kb::default_kb()), SessionIo::memory()).unwrap()
}

fn faculty_activations(s: &Session) -> usize {
    s.agenda().iter().filter(|a| a.rule == "fo-Mathematics").count()
}

#[test]
fn empty_program_holds_only_initial_fact() {
    let s = session("");
    let facts: Vec<_> = s.facts().collect();
    assert_eq!(facts.len(), 1);
    assert_eq!(facts[0].id, FactId(0));
    assert_eq!(facts[0].relation, "initial-fact");
    assert!(s.agenda().is_empty());
}

#[test]
fn reset_queues_loader_rule() {
    let s = Session::reset(Arc::new(kb::default_kb()), SessionIo::memory()).unwrap();
    let agenda = s.agenda();
    assert_eq!(agenda.len(), 1);
    assert_eq!(agenda[0].rule, "readtextfiledata");
    assert_eq!(agenda[0].fact_ids, vec![FactId(0), FactId(0)]);
}

#[test]
fn higher_salience_heads_the_agenda() {
    let s = session(
        "(defrule low (initial-fact) =>)
         (defrule high (declare (salience 2000)) (initial-fact) =>)",
    );
    assert_eq!(s.agenda()[0].rule, "high");
    assert_eq!(s.agenda()[1].rule, "low");
}

#[test]
fn equal_salience_prefers_most_recent() {
    let mut s = session("(defrule r (item ?x) =>)");
    s.assert_fact(FactInput::ordered("item", vec![Value::Integer(1)])).unwrap();
    s.assert_fact(FactInput::ordered("item", vec![Value::Integer(2)])).unwrap();
    let order: Vec<_> = s.agenda().iter().map(|a| a.bindings["x"].clone()).collect();
    assert_eq!(order, vec![Value::Integer(2), Value::Integer(1)]);
}

#[test]
fn deffacts_follow_initial_fact() {
    let s = session("(deffacts seed (item 1) (item 2)) (defrule r (item ?x) =>)");
    let ids: Vec<_> = s.facts().map(|f| f.id.0).collect();
    assert_eq!(ids, vec![0, 1, 2]);
    assert_eq!(s.agenda().len(), 2);
}

#[test]
fn science_student_activates_mathematics() {
    let mut s = math_session();
    // 75 ≥ 60, Science, 2010 ≥ 2009: all three acceptance tests hold.
    s.assert_fact(student_slots(75, "Science", 2010)).unwrap();
    assert_eq!(faculty_activations(&s), 1);
}

#[test]
fn arts_student_does_not() {
    let mut s = math_session();
    s.assert_fact(student_slots(75, "Arts", 2010)).unwrap();
    assert_eq!(faculty_activations(&s), 0);
    // Symbols are case-sensitive.
    s.assert_fact(student_slots(75, "science", 2011)).unwrap();
    assert_eq!(faculty_activations(&s), 0);
}

#[test]
fn duplicate_assert_is_suppressed() {
    let mut s = math_session();
    let first = s.assert_fact(student_slots(75, "Science", 2010)).unwrap();
    let second = s.assert_fact(student_slots(75, "Science", 2010)).unwrap();
    assert!(matches!(first, AssertOutcome::Asserted(_)));
    assert_eq!(second, AssertOutcome::Duplicate(first.id()));
    assert_eq!(faculty_activations(&s), 1);
    assert_eq!(s.facts().count(), 2);
}

#[test]
fn unset_slots_are_nil() {
    let mut s = session("(deftemplate p (slot a) (slot b))");
    let id = s
        .assert_fact(FactInput::template("p", vec![("b", Value::Integer(3))]))
        .unwrap()
        .id();
    assert_eq!(s.fact(id).unwrap().values(), &[Value::Nil, Value::Integer(3)]);
}

#[test]
fn assert_errors() {
    let mut s = session("(deftemplate p (slot a))");
    assert_eq!(
        s.assert_fact(FactInput::template("q", vec![("a", Value::Integer(1))])),
        Err(EngineError::UnknownTemplate("q".into()))
    );
    assert!(matches!(
        s.assert_fact(FactInput::template("p", vec![("z", Value::Integer(1))])),
        Err(EngineError::UnknownSlot { .. })
    ));
}

#[test]
fn retract_removes_dependent_activations() {
    let mut s = session("(defrule one (k ?x) =>) (defrule two (k ?x) (j ?y) =>)");
    let k = s.assert_fact(FactInput::ordered("k", vec![Value::Integer(1)])).unwrap().id();
    s.assert_fact(FactInput::ordered("j", vec![Value::Integer(2)])).unwrap();
    assert_eq!(s.agenda().len(), 2);
    s.retract_fact(k).unwrap();
    assert!(s.agenda().is_empty());
    assert_eq!(s.retract_fact(k), Err(EngineError::UnknownFact(k)));
}

#[test]
fn retracted_initial_fact_cannot_reactivate() {
    let mut s = session(
        "(defrule boot (declare (salience 10)) ?f <- (initial-fact) => (retract ?f))
         (defrule other (initial-fact) =>)",
    );
    assert_eq!(s.run(None).unwrap(), 1);
    assert_eq!(s.fired()[0].rule, "boot");
    assert!(s.agenda().is_empty());
    // A fresh (initial-fact) gets a fresh id, so this is a new activation.
    let again = s.assert_fact(FactInput::ordered("initial-fact", vec![])).unwrap().id();
    assert_eq!(again, FactId(1));
}

#[test]
fn rule_without_patterns_keys_on_initial_fact() {
    let mut s = session("(defrule hello => (printout t \"hi\" crlf))");
    assert_eq!(s.agenda()[0].fact_ids, vec![FactId(0)]);
    s.run(None).unwrap();
    assert_eq!(s.stdout(), b"hi\r\n");
}

#[test]
fn self_asserting_rule_fires_once() {
    let mut s = session("(deffacts d (go 1)) (defrule loop (go ?x) => (assert (go ?x)))");
    assert_eq!(s.run(None).unwrap(), 1);
    assert!(s.agenda().is_empty());
}

#[test]
fn chaining_through_asserted_facts() {
    let mut s = session(
        "(deffacts d (n 0))
         (defrule step (n ?x) (test (< ?x 5)) => (assert (n (+ ?x 1))))",
    );
    assert_eq!(s.run(None).unwrap(), 5);
    assert_eq!(s.facts().count(), 7);
}

#[test]
fn max_fires_leaves_rest_on_agenda() {
    let kb = Arc::new(kb::default_kb());
    let io = SessionIo::memory().with_file(kb::INPUT_FILE, common::golden_in());
    let mut s = Session::reset(kb, io).unwrap();
    assert_eq!(s.run(Some(1)).unwrap(), 1);
    assert_eq!(s.agenda().len(), 1);
    assert_eq!(s.agenda()[0].rule, "fo-Mathematics");
}

#[test]
fn full_program_fires_loader_first_then_faculty() {
    let kb = Arc::new(kb::default_kb());
    let io = SessionIo::memory().with_file(kb::INPUT_FILE, common::golden_in());
    let mut s = Session::reset(kb, io).unwrap();
    assert_eq!(s.run(None).unwrap(), 2);
    let fired: Vec<_> = s.fired().iter().map(|f| f.rule.as_str()).collect();
    assert_eq!(fired, ["readtextfiledata", "fo-Mathematics"]);
    assert_eq!(s.file(kb::OUTPUT_FILE).unwrap(), common::golden_out());
}

#[test]
fn printout_formatting() {
    let mut s = session(
        "(defrule p => (printout t \"No=\" 1 crlf \"name= \" Ali crlf 65.0 \" \" 75.5 \" \" (/ 1 3) crlf))",
    );
    s.run(None).unwrap();
    assert_eq!(
        std::str::from_utf8(s.stdout()).unwrap(),
        "No=1\r\nname= Ali\r\n65.0 75.5 0.3333333333333333\r\n"
    );
}

#[test]
fn read_returns_tokens_by_shape() {
    let mut s = session(
        "(defrule r =>
            (open \"in.txt\" fdatai \"r\")
            (bind ?a (read fdatai)) (bind ?b (read fdatai)) (bind ?c (read fdatai))
            (assert (got ?a ?b)) (printout t ?c))",
    );
    let io_src = "75.5 Science";
    let io = SessionIo::memory().with_file("in.txt", io_src);
    s = Session::reset(Arc::new(s.program().clone()), io).unwrap();
    s.run(None).unwrap();
    let got = s.facts().find(|f| f.relation == "got").unwrap();
    assert_eq!(got.values(), &[Value::Float(75.5), Value::symbol("Science")]);
    assert_eq!(s.stdout(), b"EOF");
}

#[test]
fn runtime_errors_carry_rule_name() {
    // `out` is opened by another rule that never fires.
    let mut s = session(
        "(defrule bad => (printout out \"x\"))
         (defrule never (nothing) => (open \"o.txt\" out \"w\"))",
    );
    let err = s.run(None).unwrap_err();
    assert_eq!(err.rule, "bad");
    assert_eq!(err.fires, 1);
    assert!(matches!(err.error, EngineError::RouterNotOpen(_)));

    let mut s = session("(defrule cmp => (if (>= Science 1) then (printout t \"y\")))");
    assert!(matches!(s.run(None).unwrap_err().error, EngineError::TypeMismatch { .. }));
}

#[test]
fn short_input_is_a_runtime_error() {
    let kb = Arc::new(kb::default_kb());
    let io = SessionIo::memory().with_file(kb::INPUT_FILE, "1 Ali 19 60 Science 2009 80 60 60 60 0 80");
    let mut s = Session::reset(kb, io).unwrap();
    let err = s.run(None).unwrap_err();
    assert_eq!(err.rule, "readtextfiledata");
    assert!(matches!(err.error, EngineError::EofInFact(_)));
}

// ---------------------------------------------------------------------------
// Properties.

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn activations_match_brute_force(seed in any::<u64>(), retract_mask in any::<u8>()) {
        let case = GenCase::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let (mut s, _) = run_case(&case);
        let facts = case.numbered_facts();
        prop_assert_eq!(agenda_set(&s), brute_force_activations(&case.rules, &facts));
        // No duplicates on the agenda itself either.
        prop_assert_eq!(s.agenda().len(), agenda_set(&s).len());

        let kept: Vec<_> = facts
            .iter()
            .enumerate()
            .filter(|(i, _)| retract_mask & (1 << i) == 0)
            .map(|(_, f)| *f)
            .collect();
        for (i, (id, _)) in facts.iter().enumerate() {
            if retract_mask & (1 << i) != 0 {
                s.retract_fact(FactId(*id)).unwrap();
            }
        }
        prop_assert_eq!(agenda_set(&s), brute_force_activations(&case.rules, &kept));
    }

    #[test]
    fn every_pop_is_maximal(seed in any::<u64>()) {
        let case = GenCase::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let (mut s, _) = run_case(&case);
        let mut seen = BTreeSet::new();
        loop {
            let best = s.agenda().iter().map(|a| (a.salience, a.recency)).max();
            let Some(best) = best else { break };
            prop_assert_eq!(s.run(Some(1)).unwrap(), 1);
            let fired = s.fired().last().unwrap();
            prop_assert_eq!((fired.salience, fired.recency), best);
            prop_assert!(seen.insert((fired.rule.clone(), fired.fact_ids.clone())), "refired");
        }
    }

    #[test]
    fn working_memory_is_conserved(seed in any::<u64>(), retract_mask in any::<u8>()) {
        let case = GenCase::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let src = format!(
            "{}\n(defrule sweep (declare (salience -5)) ?f <- (a x ?n) (test (> ?n {})) => (retract ?f) (assert (swept ?n)))",
            case.source(),
            retract_mask % 3
        );
        let mut s = Session::reset(program(&src), SessionIo::memory()).unwrap();
        for (rel, sym, n) in &case.facts {
            let v = |o: &OVal| match o {
                OVal::Sym(s) => Value::symbol(s.clone()),
                OVal::Int(i) => Value::Integer(*i),
            };
            let _ = s.assert_fact(FactInput::ordered(rel.clone(), vec![v(sym), v(n)])).unwrap();
        }
        s.run(None).unwrap();
        prop_assert_eq!(s.facts().count(), s.assert_count() - s.retract_count());
        prop_assert!(s.agenda().is_empty());
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let record = common::random_student(&mut rng);
        let kb = Arc::new(kb::default_kb());
        let go = || {
            let io = SessionIo::memory().with_file(kb::INPUT_FILE, record.to_input());
            let mut s = Session::reset(Arc::clone(&kb), io).unwrap();
            s.run(None).unwrap();
            (s.fired().to_vec(), s.file(kb::OUTPUT_FILE).unwrap().to_vec())
        };
        prop_assert_eq!(go(), go());
    }
}
