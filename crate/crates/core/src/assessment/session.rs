use std::collections::BTreeMap;

use chrono::{DateTime, TimeDelta, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bank::{BankError, QuestionBank, Subject};
use super::{TestPlan, INTELLIGENCE_QUESTIONS, QUESTIONS_PER_SUBJECT};
use crate::kb::criteria::{MAX_YEAR, MIN_YEAR};
use crate::kb::record::{is_plain_token, normalize_name, StudentRecord};
use crate::number::Number;

pub const MIN_AGE: i64 = 10;
pub const MAX_AGE: i64 = 100;

/// Identity and academics entered before the tests start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Background {
    pub stdid: i64,
    pub name: String,
    pub age: i64,
    pub academic_per: Number,
    pub academic_type: String,
    pub hssc_year: i64,
}

impl Background {
    /// Returns the background with its name folded to a single token, or
    /// the first invalid field.
    pub fn normalized(&self) -> Result<Background, AssessmentError> {
        let invalid = |msg: String| Err(AssessmentError::InvalidBackground(msg));
        let name = normalize_name(&self.name);
        if !is_plain_token(&name) {
            return invalid("name must be non-empty and free of quotes and parentheses".into());
        }
        if self.stdid < 0 {
            return invalid(format!("stdid {} is negative", self.stdid));
        }
        if !(MIN_AGE..=MAX_AGE).contains(&self.age) {
            return invalid(format!("age {} outside [{MIN_AGE}, {MAX_AGE}]", self.age));
        }
        if !(0.0..=100.0).contains(&self.academic_per.as_f64()) {
            return invalid(format!("academic-per {} outside [0, 100]", self.academic_per));
        }
        if !is_plain_token(&self.academic_type) || Number::parse(&self.academic_type).is_some() {
            return invalid(format!("academic-type {:?} is not a single word", self.academic_type));
        }
        if !(MIN_YEAR..=MAX_YEAR).contains(&self.hssc_year) {
            return invalid(format!("hssc-year {} outside [{MIN_YEAR}, {MAX_YEAR}]", self.hssc_year));
        }
        Ok(Background { name, ..self.clone() })
    }
}

/// Which of Computer Science or Biology is the fifth ability subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScienceGroup {
    #[serde(rename = "CS")]
    ComputerScience,
    Biology,
}

impl ScienceGroup {
    pub fn subject(self) -> Subject {
        match self {
            ScienceGroup::ComputerScience => Subject::ComputerScience,
            ScienceGroup::Biology => Subject::Biology,
        }
    }

    pub fn ability_subjects(self) -> [Subject; 5] {
        [
            Subject::English,
            Subject::Mathematics,
            Subject::Physics,
            Subject::Chemistry,
            self.subject(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Background,
    Ability,
    Intelligence,
    Finalized,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssessmentError {
    #[error("invalid background: {0}")]
    InvalidBackground(String),
    #[error("deadline expired; now in {phase:?} phase")]
    DeadlineExpired { phase: Phase, complete: bool },
    #[error("question does not belong to the current {phase:?} phase")]
    WrongPhase { phase: Phase },
    #[error("unknown question `{0}`")]
    UnknownQuestion(String),
    #[error("choice {choice} out of range for question `{question}` ({choices} choices)")]
    InvalidChoice {
        question: String,
        choice: usize,
        choices: usize,
    },
    #[error("both test phases must end before finalizing")]
    PhaseIncomplete,
    #[error(transparent)]
    Bank(#[from] BankError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ScoreSheet {
    pub english: f64,
    pub mathematics: f64,
    pub physics: f64,
    pub chemistry: f64,
    pub computer_science: f64,
    pub biology: f64,
    pub intelligence: f64,
}

impl ScoreSheet {
    pub fn get(&self, subject: Subject) -> f64 {
        match subject {
            Subject::English => self.english,
            Subject::Mathematics => self.mathematics,
            Subject::Physics => self.physics,
            Subject::Chemistry => self.chemistry,
            Subject::ComputerScience => self.computer_science,
            Subject::Biology => self.biology,
            Subject::Intelligence => self.intelligence,
        }
    }

    fn slot(&mut self, subject: Subject) -> &mut f64 {
        match subject {
            Subject::English => &mut self.english,
            Subject::Mathematics => &mut self.mathematics,
            Subject::Physics => &mut self.physics,
            Subject::Chemistry => &mut self.chemistry,
            Subject::ComputerScience => &mut self.computer_science,
            Subject::Biology => &mut self.biology,
            Subject::Intelligence => &mut self.intelligence,
        }
    }
}

/// Result of an accepted answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubmitOutcome {
    pub phase: Phase,
    pub phase_changed: bool,
    /// The intelligence phase has ended; the session can be finalized.
    pub complete: bool,
}

/// One student's progress through both timed tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SessionState {
    pub session_id: String,
    pub background: Background,
    pub science_group: ScienceGroup,
    pub phase: Phase,
    pub ability_questions: Vec<String>,
    pub intelligence_questions: Vec<String>,
    /// Index of the next question within the current phase.
    pub cursor: usize,
    pub answers: BTreeMap<String, usize>,
    pub ability_deadline: DateTime<Utc>,
    pub intelligence_deadline: Option<DateTime<Utc>>,
    pub intelligence_seconds: i64,
    /// When the intelligence phase ended, by last answer or by deadline.
    pub completed_at: Option<DateTime<Utc>>,
}

fn draw(bank: &QuestionBank, subject: Subject, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<String>, BankError> {
    let pool: Vec<&str> = bank.by_subject(subject).map(|q| q.id.as_str()).collect();
    if pool.len() < count {
        return Err(BankError::InsufficientQuestions {
            subject,
            have: pool.len(),
            need: count,
        });
    }
    Ok(rand::seq::index::sample(rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i].to_string())
        .collect())
}

/// Validates the background, draws 100 ability and 50 intelligence
/// questions with `seed`, and opens the ability phase at `now`.
pub fn start_session(
    session_id: impl Into<String>,
    background: &Background,
    science_group: ScienceGroup,
    bank: &QuestionBank,
    plan: &TestPlan,
    seed: u64,
    now: DateTime<Utc>,
) -> Result<SessionState, AssessmentError> {
    let background = background.normalized()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ability_questions = Vec::with_capacity(QUESTIONS_PER_SUBJECT * 5);
    for subject in science_group.ability_subjects() {
        ability_questions.extend(draw(bank, subject, QUESTIONS_PER_SUBJECT, &mut rng)?);
    }
    let intelligence_questions = draw(bank, Subject::Intelligence, INTELLIGENCE_QUESTIONS, &mut rng)?;
    Ok(SessionState {
        session_id: session_id.into(),
        background,
        science_group,
        phase: Phase::Ability,
        ability_questions,
        intelligence_questions,
        cursor: 0,
        answers: BTreeMap::new(),
        ability_deadline: now + TimeDelta::seconds(plan.ability_seconds),
        intelligence_deadline: None,
        intelligence_seconds: plan.intelligence_seconds,
        completed_at: None,
    })
}

impl SessionState {
    pub fn phase_questions(&self) -> &[String] {
        match self.phase {
            Phase::Ability => &self.ability_questions,
            Phase::Intelligence => &self.intelligence_questions,
            Phase::Background | Phase::Finalized => &[],
        }
    }

    pub fn deadline(&self) -> Option<DateTime<Utc>> {
        match self.phase {
            Phase::Ability => Some(self.ability_deadline),
            Phase::Intelligence => self.intelligence_deadline,
            Phase::Background | Phase::Finalized => None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.completed_at.is_some() || self.phase == Phase::Finalized
    }

    /// The next unanswered question of the current phase: id, 1-based
    /// position and phase total.
    pub fn current_question(&self) -> Option<(&str, usize, usize)> {
        if self.is_complete() {
            return None;
        }
        let questions = self.phase_questions();
        questions
            .get(self.cursor)
            .map(|id| (id.as_str(), self.cursor + 1, questions.len()))
    }

    fn start_intelligence(&mut self, at: DateTime<Utc>) {
        self.phase = Phase::Intelligence;
        self.cursor = 0;
        self.intelligence_deadline = Some(at + TimeDelta::seconds(self.intelligence_seconds));
    }

    /// Ends every phase whose deadline is before `at`. The intelligence test
    /// starts at the instant the ability test ended. Returns true if anything
    /// changed.
    pub fn advance_clock(&mut self, at: DateTime<Utc>) -> bool {
        let mut changed = false;
        if self.phase == Phase::Ability && at > self.ability_deadline {
            self.start_intelligence(self.ability_deadline);
            changed = true;
        }
        if self.phase == Phase::Intelligence && self.completed_at.is_none() {
            if let Some(deadline) = self.intelligence_deadline {
                if at > deadline {
                    self.completed_at = Some(deadline);
                    changed = true;
                }
            }
        }
        changed
    }

    /// Records an answer given at `at`. Late answers are discarded and move
    /// the session on to the next phase.
    pub fn submit_answer(
        &mut self,
        bank: &QuestionBank,
        question_id: &str,
        choice: usize,
        at: DateTime<Utc>,
    ) -> Result<SubmitOutcome, AssessmentError> {
        if matches!(self.phase, Phase::Finalized | Phase::Background) {
            return Err(AssessmentError::WrongPhase { phase: self.phase });
        }
        if self.advance_clock(at) {
            return Err(AssessmentError::DeadlineExpired {
                phase: self.phase,
                complete: self.is_complete(),
            });
        }
        if self.is_complete() {
            return Err(AssessmentError::WrongPhase { phase: self.phase });
        }
        let Some(idx) = self.phase_questions().iter().position(|q| q == question_id) else {
            let other = self.ability_questions.iter().chain(&self.intelligence_questions);
            return Err(if other.into_iter().any(|q| q == question_id) {
                AssessmentError::WrongPhase { phase: self.phase }
            } else {
                AssessmentError::UnknownQuestion(question_id.to_string())
            });
        };
        let question = bank
            .get(question_id)
            .ok_or_else(|| AssessmentError::UnknownQuestion(question_id.to_string()))?;
        if choice >= question.choices.len() {
            return Err(AssessmentError::InvalidChoice {
                question: question_id.to_string(),
                choice,
                choices: question.choices.len(),
            });
        }

        self.answers.insert(question_id.to_string(), choice);
        self.cursor = self.cursor.max(idx + 1);
        let mut phase_changed = false;
        if self.cursor >= self.phase_questions().len() {
            match self.phase {
                Phase::Ability => {
                    self.start_intelligence(at);
                    phase_changed = true;
                }
                _ => self.completed_at = Some(at),
            }
        }
        Ok(SubmitOutcome {
            phase: self.phase,
            phase_changed,
            complete: self.is_complete(),
        })
    }

    /// Percent correct per subject. Unanswered questions count as wrong and
    /// the untaken science-group subject scores 0.
    pub fn scores(&self, bank: &QuestionBank) -> ScoreSheet {
        let mut totals: BTreeMap<Subject, (usize, usize)> = BTreeMap::new();
        for id in self.ability_questions.iter().chain(&self.intelligence_questions) {
            let Some(q) = bank.get(id) else { continue };
            let entry = totals.entry(q.subject).or_default();
            entry.1 += 1;
            if self.answers.get(id) == Some(&q.correct_index) {
                entry.0 += 1;
            }
        }
        let mut sheet = ScoreSheet {
            english: 0.0,
            mathematics: 0.0,
            physics: 0.0,
            chemistry: 0.0,
            computer_science: 0.0,
            biology: 0.0,
            intelligence: 0.0,
        };
        for (subject, (correct, count)) in totals {
            *sheet.slot(subject) = 100.0 * correct as f64 / count as f64;
        }
        sheet
    }

    /// Closes the session once both phases are over and assembles the
    /// student record. Calling it again returns the same result.
    pub fn finalize(
        &mut self,
        bank: &QuestionBank,
        at: DateTime<Utc>,
    ) -> Result<(StudentRecord, ScoreSheet), AssessmentError> {
        if self.phase != Phase::Finalized {
            self.advance_clock(at);
            if !self.is_complete() {
                return Err(AssessmentError::PhaseIncomplete);
            }
            self.phase = Phase::Finalized;
        }
        let s = self.scores(bank);
        let b = &self.background;
        let record = StudentRecord {
            stdid: b.stdid,
            name: b.name.clone(),
            age: b.age,
            academic_per: b.academic_per,
            academic_type: b.academic_type.clone(),
            hssc_year: b.hssc_year,
            int_test_per: Number::Float(s.intelligence),
            eng: Number::Float(s.english),
            phy: Number::Float(s.physics),
            che: Number::Float(s.chemistry),
            cs: Number::Float(s.computer_science),
            math: Number::Float(s.mathematics),
            bio: Number::Float(s.biology),
        };
        Ok((record, s))
    }
}
