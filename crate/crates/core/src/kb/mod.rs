//! The faculty knowledge base and student evaluation.

pub mod criteria;
pub mod record;
pub mod report;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::dsl::{parse_source, Construct, Diagnostic, ParseError, Program};
use crate::engine::{EngineError, RunError, Session, SessionIo};

pub use criteria::{compile_criteria, parse_criteria, CriteriaError, FacultyCriteria, Gate};
pub use record::{RecordError, StudentRecord};
pub use report::{parse_report, AdvisementReport, ReportError, ReportHeader, Verdict};

pub const INPUT_FILE: &str = "std-data-in.txt";
pub const OUTPUT_FILE: &str = "std-data-out.txt";

/// The shipped rule files, in load order.
pub const DEFAULT_SOURCES: [(&str, &str); 3] = [
    ("student.clp", include_str!("../../kb/student.clp")),
    ("readtextfiledata.clp", include_str!("../../kb/readtextfiledata.clp")),
    ("fo-mathematics.clp", include_str!("../../kb/fo-mathematics.clp")),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KbError {
    #[error("{file}: {message}")]
    Io { file: String, message: String },
    #[error("{file}:{error}")]
    Parse { file: String, error: ParseError },
    #[error("{}", format_diagnostics(.0))]
    Validation(Vec<(String, Diagnostic)>),
    #[error("{file}: {error}")]
    Criteria { file: String, error: CriteriaError },
}

fn format_diagnostics(diags: &[(String, Diagnostic)]) -> String {
    diags
        .iter()
        .map(|(file, d)| format!("{file}:{d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses each `(file name, source)` pair and validates the combined program.
pub fn load_kb_sources<N: AsRef<str>, S: AsRef<str>>(sources: &[(N, S)]) -> Result<Program, KbError> {
    let mut constructs: Vec<Construct> = Vec::new();
    let mut origin: Vec<String> = Vec::new();
    for (name, source) in sources {
        let parsed = parse_source(source.as_ref()).map_err(|error| KbError::Parse {
            file: name.as_ref().to_string(),
            error,
        })?;
        origin.extend(std::iter::repeat_n(name.as_ref().to_string(), parsed.len()));
        constructs.extend(parsed);
    }
    let file_of = |d: &Diagnostic| {
        constructs
            .iter()
            .position(|c| c.name() == d.construct && c.pos() == d.pos)
            .map(|i| origin[i].clone())
            .unwrap_or_default()
    };
    match Program::new(constructs.clone()) {
        Ok(p) => Ok(p),
        Err(diags) => Err(KbError::Validation(
            diags.into_iter().map(|d| (file_of(&d), d)).collect(),
        )),
    }
}

/// Reads and loads rule files from disk.
pub fn load_kb(paths: &[PathBuf]) -> Result<Program, KbError> {
    let mut sources = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(path).map_err(|e| KbError::Io {
            file: path.display().to_string(),
            message: e.to_string(),
        })?;
        sources.push((path.display().to_string(), text));
    }
    load_kb_sources(&sources)
}

/// Loads `paths` after the shipped sources (or alone, if `shipped` is
/// false). Files ending in `.ini` are faculty criteria and are compiled
/// to rules first.
pub fn assemble_kb(paths: &[PathBuf], shipped: bool) -> Result<Program, KbError> {
    let mut sources: Vec<(String, String)> = Vec::new();
    if shipped {
        sources.extend(DEFAULT_SOURCES.iter().map(|(n, s)| (n.to_string(), s.to_string())));
    }
    for path in paths {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| KbError::Io {
            file: file.clone(),
            message: e.to_string(),
        })?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ini")) {
            let rules = compile_criteria_text(&text).map_err(|error| KbError::Criteria {
                file: file.clone(),
                error,
            })?;
            sources.push((file, rules));
        } else {
            sources.push((file, text));
        }
    }
    load_kb_sources(&sources)
}

/// Compiles a criteria file to rule source text, one rule per faculty.
pub fn compile_criteria_text(text: &str) -> Result<String, CriteriaError> {
    let rules = parse_criteria(text)?
        .iter()
        .map(|c| compile_criteria(c).map(Construct::Rule))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(crate::dsl::pretty_print_program(&rules))
}

/// Student template, loader rule and the Mathematics rule.
pub fn default_kb() -> Program {
    load_kb_sources(&DEFAULT_SOURCES).expect("shipped knowledge base is valid")
}

/// The shipped knowledge base plus extra constructs (e.g. compiled criteria).
pub fn default_kb_with(extra: Vec<Construct>) -> Result<Program, KbError> {
    let mut constructs = default_kb().constructs().to_vec();
    constructs.extend(extra);
    Program::new(constructs).map_err(|diags| {
        KbError::Validation(diags.into_iter().map(|d| (String::new(), d)).collect())
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluateError {
    #[error("malformed student record: {0}")]
    MalformedRecord(#[from] RecordError),
    #[error(transparent)]
    Engine(#[from] RunError),
    #[error("engine reset failed: {0}")]
    Reset(EngineError),
    #[error("the knowledge base never wrote {OUTPUT_FILE}")]
    MissingOutput,
    #[error("{OUTPUT_FILE}: {0}")]
    Io(String),
    #[error("report does not parse: {0}")]
    Report(#[from] ReportError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Advisement {
    pub report: AdvisementReport,
    /// Exact std-data-out bytes.
    pub raw: Vec<u8>,
    pub fires: usize,
}

/// Runs the knowledge base over one student with in-memory routers.
pub fn evaluate_student(record: &StudentRecord, kb: &Arc<Program>) -> Result<Advisement, EvaluateError> {
    record.validate()?;
    run_in_memory(record.to_input(), kb)
}

/// Like [`evaluate_student`], but the engine reads `input` itself, exactly
/// as given, once it has been checked to be a well-formed record.
pub fn evaluate_input(input: &str, kb: &Arc<Program>) -> Result<Advisement, EvaluateError> {
    StudentRecord::from_input(input)?.validate()?;
    run_in_memory(input.to_string(), kb)
}

fn run_in_memory(input: String, kb: &Arc<Program>) -> Result<Advisement, EvaluateError> {
    let io = SessionIo::memory().with_file(INPUT_FILE, input);
    let mut session = Session::reset(Arc::clone(kb), io).map_err(EvaluateError::Reset)?;
    let fires = session.run(None)?;
    let raw = session.file(OUTPUT_FILE).ok_or(EvaluateError::MissingOutput)?.to_vec();
    let report = parse_report(&raw)?;
    Ok(Advisement { report, raw, fires })
}

/// Same as [`evaluate_student`], but through real files in `dir`:
/// writes std-data-in.txt there and leaves std-data-out.txt behind.
pub fn evaluate_student_in_dir(
    record: &StudentRecord,
    kb: &Arc<Program>,
    dir: &Path,
) -> Result<Advisement, EvaluateError> {
    record.validate()?;
    std::fs::write(dir.join(INPUT_FILE), record.to_input())
        .map_err(|e| EvaluateError::Io(e.to_string()))?;
    let io = SessionIo::disk(dir).capture_stdout(true);
    let mut session = Session::reset(Arc::clone(kb), io).map_err(EvaluateError::Reset)?;
    let fires = session.run(None)?;
    let raw = match std::fs::read(dir.join(OUTPUT_FILE)) {
        Ok(raw) => raw,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(EvaluateError::MissingOutput),
        Err(e) => return Err(EvaluateError::Io(e.to_string())),
    };
    let report = parse_report(&raw)?;
    Ok(Advisement { report, raw, fires })
}
