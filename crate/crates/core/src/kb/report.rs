//! The advisement report written to std-data-out.txt, and its parser.
//!
//! ```text
//! [STUDENTINFO]␍␊No=<id>␍␊name= <name>␍␊Age=<age>␍␊Academic Percentage=<n>␍␊
//! Academic Type=<type>␍␊HSSC-Year=<year>␍␊␍␊
//! ([<Faculty>]␍␊Accepted=TRUE␍␊Recommended=<TRUE|FALSE>␍␊␍␊)*
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::number::Number;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReportHeader {
    pub no: i64,
    pub name: String,
    pub age: i64,
    pub academic_percentage: Number,
    pub academic_type: String,
    pub hssc_year: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub faculty: String,
    pub accepted: bool,
    pub recommended: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisementReport {
    pub header: ReportHeader,
    /// In firing order.
    pub verdicts: Vec<Verdict>,
}

impl AdvisementReport {
    pub fn verdict(&self, faculty: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.faculty == faculty)
    }

    /// One line per verdict plus a count line, for terminal output.
    pub fn summary(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .verdicts
            .iter()
            .map(|v| {
                format!(
                    "{}: accepted, {}",
                    v.faculty,
                    if v.recommended { "recommended" } else { "not recommended" }
                )
            })
            .collect();
        let n = self.verdicts.len();
        lines.push(format!(
            "{n} {} accepted",
            if n == 1 { "faculty" } else { "faculties" }
        ));
        lines
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("report is not valid UTF-8")]
    NotUtf8,
    #[error("line {line}: expected {expected}, found {found:?}")]
    Unexpected {
        line: usize,
        expected: String,
        found: String,
    },
    #[error("report does not end with a blank CRLF line")]
    Truncated,
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    idx: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, expected: &str) -> Result<&'a str, ReportError> {
        let line = self.lines.get(self.idx).copied().ok_or(ReportError::Truncated)?;
        self.idx += 1;
        if line.contains(['\r', '\n']) {
            return Err(self.unexpected(expected, line));
        }
        Ok(line)
    }

    fn unexpected(&self, expected: &str, found: &str) -> ReportError {
        ReportError::Unexpected {
            line: self.idx,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    fn field(&mut self, key: &str) -> Result<&'a str, ReportError> {
        let line = self.next(key)?;
        line.strip_prefix(key)
            .ok_or_else(|| self.unexpected(&format!("`{key}...`"), line))
    }

    fn exact(&mut self, text: &str) -> Result<(), ReportError> {
        let line = self.next(text)?;
        if line == text {
            Ok(())
        } else {
            Err(self.unexpected(&format!("{text:?}"), line))
        }
    }
}

/// Parses report bytes, rejecting anything outside the report grammar
/// (including bare `\n` line endings).
pub fn parse_report(bytes: &[u8]) -> Result<AdvisementReport, ReportError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ReportError::NotUtf8)?;
    let body = text.strip_suffix("\r\n").ok_or(ReportError::Truncated)?;
    let mut lines = Lines {
        lines: body.split("\r\n").collect(),
        idx: 0,
    };

    let int = |lines: &Lines, key: &str, v: &str| {
        v.parse::<i64>()
            .map_err(|_| lines.unexpected(&format!("an integer after `{key}`"), v))
    };

    lines.exact("[STUDENTINFO]")?;
    let no = lines.field("No=")?;
    let no = int(&lines, "No=", no)?;
    let name = lines.field("name= ")?.to_string();
    let age = lines.field("Age=")?;
    let age = int(&lines, "Age=", age)?;
    let per = lines.field("Academic Percentage=")?;
    let academic_percentage =
        Number::parse(per).ok_or_else(|| lines.unexpected("a number", per))?;
    let academic_type = lines.field("Academic Type=")?.to_string();
    let year = lines.field("HSSC-Year=")?;
    let hssc_year = int(&lines, "HSSC-Year=", year)?;
    lines.exact("")?;

    let mut verdicts = Vec::new();
    while lines.idx < lines.lines.len() {
        let section = lines.next("`[<Faculty>]`")?;
        let faculty = section
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .filter(|s| !s.is_empty())
            .ok_or_else(|| lines.unexpected("`[<Faculty>]`", section))?
            .to_string();
        lines.exact("Accepted=TRUE")?;
        let rec = lines.field("Recommended=")?;
        let recommended = match rec {
            "TRUE" => true,
            "FALSE" => false,
            other => return Err(lines.unexpected("TRUE or FALSE", other)),
        };
        lines.exact("")?;
        verdicts.push(Verdict {
            faculty,
            accepted: true,
            recommended,
        });
    }

    Ok(AdvisementReport {
        header: ReportHeader {
            no,
            name,
            age,
            academic_percentage,
            academic_type,
            hssc_year,
        },
        verdicts,
    })
}
