//! Timed ability and intelligence tests.
//!
//! The ability test draws 20 questions from each of English, Mathematics,
//! Physics, Chemistry and one of Computer Science or Biology. The
//! intelligence test (50 questions) starts the moment the ability test ends.

pub mod bank;
pub mod session;

use serde::{Deserialize, Serialize};

pub use bank::{load_bank, BankError, Question, QuestionBank, Subject};
pub use session::{
    start_session, AssessmentError, Background, Phase, ScienceGroup, ScoreSheet, SessionState,
    SubmitOutcome,
};

pub const QUESTIONS_PER_SUBJECT: usize = 20;
pub const ABILITY_QUESTIONS: usize = 5 * QUESTIONS_PER_SUBJECT;
pub const INTELLIGENCE_QUESTIONS: usize = 50;

/// Phase durations. Question counts are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TestPlan {
    pub ability_seconds: i64,
    pub intelligence_seconds: i64,
}

impl Default for TestPlan {
    fn default() -> Self {
        Self {
            ability_seconds: 60 * 60,
            intelligence_seconds: 30 * 60,
        }
    }
}
