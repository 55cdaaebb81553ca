use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::number::Number;

/// The 13-field student profile, in the order the loader rule reads it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct StudentRecord {
    pub stdid: i64,
    pub name: String,
    pub age: i64,
    pub academic_per: Number,
    pub academic_type: String,
    #[serde(rename = "HSSC-year")]
    pub hssc_year: i64,
    pub int_test_per: Number,
    #[serde(rename = "ability-test-eng-per")]
    pub eng: Number,
    #[serde(rename = "ability-test-phy-per")]
    pub phy: Number,
    #[serde(rename = "ability-test-che-per")]
    pub che: Number,
    #[serde(rename = "ability-test-cs-per")]
    pub cs: Number,
    #[serde(rename = "ability-test-math-per")]
    pub math: Number,
    #[serde(rename = "ability-test-bio-per")]
    pub bio: Number,
}

/// Slot names of the `student` template, in read order.
pub const RECORD_FIELDS: [&str; 13] = [
    "stdid",
    "name",
    "age",
    "academic-per",
    "academic-type",
    "HSSC-year",
    "int-test-per",
    "ability-test-eng-per",
    "ability-test-phy-per",
    "ability-test-che-per",
    "ability-test-cs-per",
    "ability-test-math-per",
    "ability-test-bio-per",
];

/// The seven percentage slots a faculty may gate on.
pub const PERCENT_FIELDS: [&str; 7] = [
    "int-test-per",
    "ability-test-eng-per",
    "ability-test-phy-per",
    "ability-test-che-per",
    "ability-test-cs-per",
    "ability-test-math-per",
    "ability-test-bio-per",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("expected 13 tokens, found {0}")]
    TokenCount(usize),
    #[error("field `{field}`: expected {expected}, found `{found}`")]
    BadField {
        field: &'static str,
        expected: &'static str,
        found: String,
    },
    #[error("field `{field}`: {value} is outside [0, 100]")]
    PercentOutOfRange { field: &'static str, value: Number },
    #[error("field `{field}` must be a single token without quotes or parentheses")]
    NotAToken { field: &'static str },
}

/// True for text that `read` returns unchanged as one symbol-or-number
/// token.
pub fn is_plain_token(text: &str) -> bool {
    !text.is_empty()
        && !text
            .chars()
            .any(|c| c.is_whitespace() || c.is_control() || matches!(c, '"' | '(' | ')' | ';'))
}

/// Replaces whitespace runs with underscores so the name reads back as one token.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join("_")
}

impl StudentRecord {
    pub fn percent(&self, field: &str) -> Option<Number> {
        Some(match field {
            "academic-per" => self.academic_per,
            "int-test-per" => self.int_test_per,
            "ability-test-eng-per" => self.eng,
            "ability-test-phy-per" => self.phy,
            "ability-test-che-per" => self.che,
            "ability-test-cs-per" => self.cs,
            "ability-test-math-per" => self.math,
            "ability-test-bio-per" => self.bio,
            _ => return None,
        })
    }

    pub fn percent_mut(&mut self, field: &str) -> Option<&mut Number> {
        Some(match field {
            "academic-per" => &mut self.academic_per,
            "int-test-per" => &mut self.int_test_per,
            "ability-test-eng-per" => &mut self.eng,
            "ability-test-phy-per" => &mut self.phy,
            "ability-test-che-per" => &mut self.che,
            "ability-test-cs-per" => &mut self.cs,
            "ability-test-math-per" => &mut self.math,
            "ability-test-bio-per" => &mut self.bio,
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        if !is_plain_token(&self.name) {
            return Err(RecordError::NotAToken { field: "name" });
        }
        if !is_plain_token(&self.academic_type) || Number::parse(&self.academic_type).is_some() {
            return Err(RecordError::NotAToken { field: "academic-type" });
        }
        let percents = std::iter::once("academic-per").chain(PERCENT_FIELDS);
        for field in percents {
            let value = self.percent(field).expect("known percentage field");
            let v = value.as_f64();
            if !(0.0..=100.0).contains(&v) {
                let field = RECORD_FIELDS.iter().find(|f| **f == field).expect("known field");
                return Err(RecordError::PercentOutOfRange { field, value });
            }
        }
        Ok(())
    }

    /// The std-data-in token stream: one line, single spaces, trailing newline.
    pub fn to_input(&self) -> String {
        format!(
            "{} {} {} {} {} {} {} {} {} {} {} {} {}\n",
            self.stdid,
            self.name,
            self.age,
            self.academic_per,
            self.academic_type,
            self.hssc_year,
            self.int_test_per,
            self.eng,
            self.phy,
            self.che,
            self.cs,
            self.math,
            self.bio
        )
    }

    /// Parses a std-data-in token stream and checks the record invariants.
    pub fn from_input(text: &str) -> Result<Self, RecordError> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != RECORD_FIELDS.len() {
            return Err(RecordError::TokenCount(tokens.len()));
        }
        let int = |i: usize| {
            tokens[i].parse::<i64>().map_err(|_| RecordError::BadField {
                field: RECORD_FIELDS[i],
                expected: "an integer",
                found: tokens[i].to_string(),
            })
        };
        let num = |i: usize| {
            Number::parse(tokens[i]).ok_or_else(|| RecordError::BadField {
                field: RECORD_FIELDS[i],
                expected: "a number",
                found: tokens[i].to_string(),
            })
        };
        let record = StudentRecord {
            stdid: int(0)?,
            name: tokens[1].to_string(),
            age: int(2)?,
            academic_per: num(3)?,
            academic_type: tokens[4].to_string(),
            hssc_year: int(5)?,
            int_test_per: num(6)?,
            eng: num(7)?,
            phy: num(8)?,
            che: num(9)?,
            cs: num(10)?,
            math: num(11)?,
            bio: num(12)?,
        };
        record.validate()?;
        Ok(record)
    }
}
