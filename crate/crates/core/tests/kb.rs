mod common;

use std::sync::Arc;

use common::{boundary_student, golden_out, mathematics, matrix_record, oracle_verdict, random_student};
use dss_core::dsl::{parse_source, pretty_print, Construct, Program};
use dss_core::kb::{self, *};
use dss_core::Number;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shipped() -> Arc<Program> {
    Arc::new(kb::default_kb())
}

fn sample_criteria() -> Vec<FacultyCriteria> {
    let text = std::fs::read_to_string(common::fixtures().join("../criteria/sample-faculties.ini")).unwrap();
    parse_criteria(&text).unwrap()
}

/// Shipped KB plus the sample faculties, in file order.
fn with_samples() -> Arc<Program> {
    let extra = sample_criteria()
        .iter()
        .map(|c| Construct::Rule(compile_criteria(c).unwrap()))
        .collect();
    Arc::new(default_kb_with(extra).unwrap())
}

#[test]
fn boundary_student_matches_golden() {
    let out = evaluate_student(&boundary_student(), &shipped()).unwrap();
    assert_eq!(out.raw, golden_out());
    let dir = tempfile::tempdir().unwrap();
    let disk = evaluate_student_in_dir(&boundary_student(), &shipped(), dir.path()).unwrap();
    assert_eq!(disk.raw, golden_out());
    assert_eq!(std::fs::read(dir.path().join(OUTPUT_FILE)).unwrap(), golden_out());
}

#[test]
fn golden_input_is_the_boundary_record() {
    let text = String::from_utf8(common::golden_in()).unwrap();
    assert_eq!(StudentRecord::from_input(&text).unwrap(), boundary_student());
}

#[test]
fn threshold_matrix_agrees_with_oracle() {
    let kb = shipped();
    let maths = mathematics();
    for mask in 0..=255u8 {
        let r = matrix_record(mask);
        let out = evaluate_student(&r, &kb).unwrap();
        let got = out.report.verdict("Mathematics").map(|v| v.recommended);
        assert_eq!(got, oracle_verdict(&maths, &r), "mask {mask:08b}");
        assert_eq!(out.fires, 1 + usize::from(got.is_some()));
    }
}

#[test]
fn kb_with_one_compiled_rule() {
    let c = &sample_criteria()[0];
    let kb = default_kb_with(vec![Construct::Rule(compile_criteria(c).unwrap())]).unwrap();
    assert_eq!(kb.templates().count(), 1);
    assert_eq!(kb.rules().count(), 3);
}

#[test]
fn empty_gate_list_recommends_every_accepted_student() {
    let mut c = mathematics();
    c.faculty = "Open".into();
    c.gates.clear();
    let kb = Arc::new(default_kb_with(vec![Construct::Rule(compile_criteria(&c).unwrap())]).unwrap());
    let mut r = boundary_student();
    for field in kb::record::PERCENT_FIELDS {
        *r.percent_mut(field).unwrap() = Number::Int(0);
    }
    let out = evaluate_student(&r, &kb).unwrap();
    assert_eq!(out.report.verdict("Open").map(|v| v.recommended), Some(true));
    assert_eq!(out.report.verdict("Mathematics").map(|v| v.recommended), Some(false));
}

#[test]
fn sections_come_out_in_reverse_load_order() {
    let kb = with_samples();
    let mut r = boundary_student();
    for field in kb::record::PERCENT_FIELDS {
        *r.percent_mut(field).unwrap() = Number::Int(100);
    }
    r.academic_per = Number::Int(90);
    let out = evaluate_student(&r, &kb).unwrap();
    let order: Vec<_> = out.report.verdicts.iter().map(|v| v.faculty.as_str()).collect();
    assert_eq!(order, ["Biology-group", "Computer-Science", "Engineering", "Mathematics"]);
    assert!(out.report.verdicts.iter().all(|v| v.accepted && v.recommended));
    assert_eq!(out.fires, 5);
}

#[test]
fn malformed_record_is_rejected_before_running() {
    let mut r = boundary_student();
    r.math = Number::Int(101);
    assert!(matches!(
        evaluate_student(&r, &shipped()),
        Err(EvaluateError::MalformedRecord(RecordError::PercentOutOfRange { .. }))
    ));
}

fn random_criteria<R: Rng>(rng: &mut R, i: usize) -> FacultyCriteria {
    let mut fields = kb::record::PERCENT_FIELDS.to_vec();
    fields.shuffle(rng);
    let n = rng.gen_range(0..=fields.len());
    FacultyCriteria {
        faculty: format!("Faculty-{i}"),
        min_academic_per: common::random_percent(rng),
        academic_type: if rng.gen_bool(0.8) { "Science" } else { "Arts" }.into(),
        min_hssc_year: rng.gen_range(2005..2013),
        gates: fields[..n]
            .iter()
            .map(|f| Gate {
                field: f.to_string(),
                min: common::random_percent(rng),
            })
            .collect(),
    }
}

#[test]
fn compiled_criteria_agree_with_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for round in 0..10 {
        let criteria: Vec<_> = (0..3).map(|i| random_criteria(&mut rng, i)).collect();
        // Through text, so the printer and parser are part of the path.
        let text: String = criteria
            .iter()
            .map(|c| pretty_print(&Construct::Rule(compile_criteria(c).unwrap())))
            .collect::<Vec<_>>()
            .join("\n");
        let kb = Arc::new(
            load_kb_sources(&[DEFAULT_SOURCES[0], DEFAULT_SOURCES[1], ("generated.clp", text.as_str())])
                .unwrap(),
        );
        for _ in 0..50 {
            let r = random_student(&mut rng);
            let report = evaluate_student(&r, &kb).unwrap().report;
            for c in &criteria {
                assert_eq!(
                    report.verdict(&c.faculty).map(|v| v.recommended),
                    oracle_verdict(c, &r),
                    "round {round}, {c:?}, {r:?}"
                );
            }
            assert_eq!(
                report.verdicts.len(),
                criteria.iter().filter(|c| oracle_verdict(c, &r).is_some()).count()
            );
        }
    }
}

#[test]
fn compiled_text_loads_cleanly() {
    let text: String = sample_criteria()
        .iter()
        .map(|c| pretty_print(&Construct::Rule(compile_criteria(c).unwrap())))
        .collect();
    let mut constructs = parse_source(&text).unwrap();
    assert_eq!(constructs.len(), 3);
    constructs.extend(kb::default_kb().constructs().iter().cloned());
    assert!(Program::new(constructs).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn raising_a_score_never_hurts(
        seed in any::<u64>(),
        field in prop::sample::select(common::RAISABLE.to_vec()),
        by in prop_oneof![(1..=40i64).prop_map(|i| i as f64), (1..=80i64).prop_map(|h| h as f64 / 2.0)],
    ) {
        let kb = with_samples();
        let before = random_student(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut after = before.clone();
        common::raise(&mut after, field, by);
        let a = evaluate_student(&before, &kb).unwrap().report;
        let b = evaluate_student(&after, &kb).unwrap().report;
        for v in &a.verdicts {
            let later = b.verdict(&v.faculty);
            prop_assert!(later.is_some(), "{} dropped", v.faculty);
            prop_assert!(!v.recommended || later.unwrap().recommended, "{} unrecommended", v.faculty);
        }
    }

    #[test]
    fn files_and_memory_agree(seed in any::<u64>()) {
        let r = random_student(&mut ChaCha8Rng::seed_from_u64(seed));
        let kb = with_samples();
        let dir = tempfile::tempdir().unwrap();
        let mem = evaluate_student(&r, &kb).unwrap();
        let disk = evaluate_student_in_dir(&r, &kb, dir.path()).unwrap();
        prop_assert_eq!(mem, disk);
    }

    #[test]
    fn record_text_round_trips(seed in any::<u64>()) {
        let r = random_student(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(StudentRecord::from_input(&r.to_input()).unwrap(), r);
    }
}
