//! Question banks.
//!
//! One question per line: `id|subject|prompt|choice;choice;...|correct-index`.
//! Blank lines and lines starting with `#` are skipped.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{INTELLIGENCE_QUESTIONS, QUESTIONS_PER_SUBJECT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subject {
    English,
    Mathematics,
    Physics,
    Chemistry,
    ComputerScience,
    Biology,
    Intelligence,
}

impl Subject {
    pub const ALL: [Subject; 7] = [
        Subject::English,
        Subject::Mathematics,
        Subject::Physics,
        Subject::Chemistry,
        Subject::ComputerScience,
        Subject::Biology,
        Subject::Intelligence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subject::English => "English",
            Subject::Mathematics => "Mathematics",
            Subject::Physics => "Physics",
            Subject::Chemistry => "Chemistry",
            Subject::ComputerScience => "ComputerScience",
            Subject::Biology => "Biology",
            Subject::Intelligence => "Intelligence",
        }
    }

    /// Minimum number of questions a bank must hold for this subject.
    pub fn required(self) -> usize {
        match self {
            Subject::Intelligence => INTELLIGENCE_QUESTIONS,
            _ => QUESTIONS_PER_SUBJECT,
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subject {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Subject::ALL.into_iter().find(|x| x.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub subject: Subject,
    pub prompt: String,
    pub choices: Vec<String>,
    pub correct_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BankError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("not enough {subject} questions: have {have}, need {need}")]
    InsufficientQuestions {
        subject: Subject,
        have: usize,
        need: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionBank {
    questions: Vec<Question>,
    index: HashMap<String, usize>,
}

const MIN_CHOICES: usize = 2;
const MAX_CHOICES: usize = 6;

fn parse_line(line: &str, line_no: usize) -> Result<Question, BankError> {
    let err = |message: String| BankError::Parse { line: line_no, message };
    let fields: Vec<&str> = line.split('|').collect();
    let [id, subject, prompt, choices, correct] = fields[..] else {
        return Err(err(format!("expected 5 `|`-separated fields, found {}", fields.len())));
    };
    let id = id.trim();
    if id.is_empty() {
        return Err(err("empty question id".into()));
    }
    let subject = subject
        .trim()
        .parse::<Subject>()
        .map_err(|_| err(format!("unknown subject {:?}", subject.trim())))?;
    let prompt = prompt.trim();
    if prompt.is_empty() {
        return Err(err("empty prompt".into()));
    }
    let choices: Vec<String> = choices.split(';').map(|c| c.trim().to_string()).collect();
    if !(MIN_CHOICES..=MAX_CHOICES).contains(&choices.len()) {
        return Err(err(format!(
            "{} choices; need {MIN_CHOICES} to {MAX_CHOICES}",
            choices.len()
        )));
    }
    if choices.iter().any(String::is_empty) {
        return Err(err("empty choice".into()));
    }
    let correct_index = correct
        .trim()
        .parse::<usize>()
        .map_err(|_| err(format!("bad correct index {:?}", correct.trim())))?;
    if correct_index >= choices.len() {
        return Err(err(format!(
            "correct index {correct_index} out of range for {} choices",
            choices.len()
        )));
    }
    Ok(Question {
        id: id.to_string(),
        subject,
        prompt: prompt.to_string(),
        choices,
        correct_index,
    })
}

impl QuestionBank {
    /// Parses a bank and checks it can fill a full test plan.
    pub fn parse(text: &str) -> Result<Self, BankError> {
        let mut questions = Vec::new();
        let mut index = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let q = parse_line(line, i + 1)?;
            if index.insert(q.id.clone(), questions.len()).is_some() {
                return Err(BankError::Parse {
                    line: i + 1,
                    message: format!("duplicate question id `{}`", q.id),
                });
            }
            questions.push(q);
        }
        let bank = QuestionBank { questions, index };
        for subject in Subject::ALL {
            let have = bank.count(subject);
            let need = subject.required();
            if have < need {
                return Err(BankError::InsufficientQuestions { subject, have, need });
            }
        }
        Ok(bank)
    }

    pub fn load(path: &Path) -> Result<Self, BankError> {
        let text = std::fs::read_to_string(path).map_err(|e| BankError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, id: &str) -> Option<&Question> {
        self.index.get(id).map(|&i| &self.questions[i])
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn by_subject(&self, subject: Subject) -> impl Iterator<Item = &Question> {
        self.questions.iter().filter(move |q| q.subject == subject)
    }

    pub fn count(&self, subject: Subject) -> usize {
        self.by_subject(subject).count()
    }
}

/// Loads and checks a bank file.
pub fn load_bank(path: &Path) -> Result<QuestionBank, BankError> {
    QuestionBank::load(path)
}
