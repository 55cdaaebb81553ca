//! Per-session persistence: an append-only JSON-lines event log,
//! `<id>.jsonl`, plus an occasional full snapshot, `<id>.snapshot.json`.
//! On startup each session is rebuilt from its snapshot and the log lines
//! after it.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use dss_core::assessment::{QuestionBank, ScoreSheet, SessionState};
use dss_core::kb::{AdvisementReport, StudentRecord};
use serde::{Deserialize, Serialize};

/// What finalization produced. Written once, never recomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct StoredReport {
    pub record: StudentRecord,
    pub scores: ScoreSheet,
    pub report: AdvisementReport,
    /// Exact std-data-out text.
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SessionRecord {
    pub state: SessionState,
    pub created_at: DateTime<Utc>,
    /// Number of events applied; bumped by every mutation.
    pub version: u64,
    pub report: Option<StoredReport>,
    /// Set instead of `report` when the knowledge base failed on this student.
    pub evaluation_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum Event {
    #[serde(rename_all = "kebab-case")]
    Created {
        state: SessionState,
        created_at: DateTime<Utc>,
    },
    #[serde(rename_all = "kebab-case")]
    Answered {
        question_id: String,
        choice_index: usize,
        at: DateTime<Utc>,
    },
    /// A deadline passed and the session moved on.
    ClockAdvanced { at: DateTime<Utc> },
    #[serde(rename_all = "kebab-case")]
    Finalized {
        at: DateTime<Utc>,
        report: Option<StoredReport>,
        evaluation_error: Option<String>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct LogLine {
    version: u64,
    #[serde(flatten)]
    event: Event,
}

impl SessionRecord {
    fn new(event: &Event) -> Result<Self, String> {
        match event {
            Event::Created { state, created_at } => Ok(SessionRecord {
                state: state.clone(),
                created_at: *created_at,
                version: 1,
                report: None,
                evaluation_error: None,
            }),
            other => Err(format!("log starts with {other:?}")),
        }
    }

    /// Replays one event. Only events that applied cleanly are ever logged,
    /// so an error here means the log or the bank changed underneath us.
    fn apply(&mut self, event: &Event, bank: &QuestionBank) -> Result<(), String> {
        match event {
            Event::Created { .. } => return Err("second creation event".into()),
            Event::Answered { question_id, choice_index, at } => {
                self.state
                    .submit_answer(bank, question_id, *choice_index, *at)
                    .map_err(|e| e.to_string())?;
            }
            Event::ClockAdvanced { at } => {
                self.state.advance_clock(*at);
            }
            Event::Finalized { at, report, evaluation_error } => {
                self.state.finalize(bank, *at).map_err(|e| e.to_string())?;
                self.report = report.clone();
                self.evaluation_error = evaluation_error.clone();
            }
        }
        self.version += 1;
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("session {id}: {message}")]
    Corrupt { id: String, message: String },
    #[error("{0}")]
    Rejected(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |e| StoreError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub type SessionHandle = Arc<Mutex<SessionRecord>>;

/// All sessions, in memory and on disk. Each session has its own lock, so
/// mutations of one session are serialized while others proceed.
pub struct Store {
    dir: PathBuf,
    snapshot_every: u64,
    sessions: RwLock<HashMap<String, SessionHandle>>,
}

impl Store {
    /// Opens (creating if needed) the directory and replays every session in it.
    pub fn open(dir: &Path, snapshot_every: u64, bank: &QuestionBank) -> Result<Self, StoreError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(dir).map_err(io_err(dir))? {
            let path = entry.map_err(io_err(dir))?.path();
            let Some(id) = path.file_name().and_then(|n| n.to_str()).and_then(|n| n.strip_suffix(".jsonl"))
            else {
                continue;
            };
            let record = replay(dir, id, bank)?;
            sessions.insert(id.to_string(), Arc::new(Mutex::new(record)));
        }
        Ok(Store {
            dir: dir.to_path_buf(),
            snapshot_every: snapshot_every.max(1),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn get(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.read().unwrap().get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn log_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    /// Persists a new session. Fails if the id is taken.
    pub fn create(&self, state: SessionState, created_at: DateTime<Utc>) -> Result<SessionHandle, StoreError> {
        let id = state.session_id.clone();
        if !is_safe_id(&id) {
            return Err(StoreError::Rejected(format!("unusable session id {id:?}")));
        }
        let event = Event::Created { state, created_at };
        let record = SessionRecord::new(&event).map_err(StoreError::Rejected)?;
        let mut sessions = self.sessions.write().unwrap();
        if sessions.contains_key(&id) {
            return Err(StoreError::Rejected(format!("session {id} exists")));
        }
        let path = self.log_path(&id);
        let mut file = OpenOptions::new().write(true).create_new(true).open(&path).map_err(io_err(&path))?;
        write_line(&mut file, &path, &LogLine { version: 1, event })?;
        let handle = Arc::new(Mutex::new(record));
        sessions.insert(id, Arc::clone(&handle));
        Ok(handle)
    }

    /// Applies `event` to a copy of `record`, logs it, and only then makes
    /// it visible. The caller holds the session's lock.
    pub fn commit(&self, record: &mut SessionRecord, event: Event, bank: &QuestionBank) -> Result<(), StoreError> {
        let id = record.state.session_id.clone();
        let mut next = record.clone();
        next.apply(&event, bank).map_err(StoreError::Rejected)?;
        let path = self.log_path(&id);
        let mut file = OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?;
        let finalized = matches!(event, Event::Finalized { .. });
        write_line(&mut file, &path, &LogLine { version: next.version, event })?;
        *record = next;
        if finalized || record.version.is_multiple_of(self.snapshot_every) {
            self.snapshot(record)?;
        }
        Ok(())
    }

    fn snapshot(&self, record: &SessionRecord) -> Result<(), StoreError> {
        let id = &record.state.session_id;
        let path = self.dir.join(format!("{id}.snapshot.json"));
        let tmp = self.dir.join(format!("{id}.snapshot.tmp"));
        let bytes = serde_json::to_vec(record).expect("session records serialize");
        let mut file = File::create(&tmp).map_err(io_err(&tmp))?;
        file.write_all(&bytes).map_err(io_err(&tmp))?;
        file.sync_all().map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }
}

fn is_safe_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn write_line(file: &mut File, path: &Path, line: &LogLine) -> Result<(), StoreError> {
    let mut bytes = serde_json::to_vec(line).expect("events serialize");
    bytes.push(b'\n');
    file.write_all(&bytes).map_err(io_err(path))?;
    file.sync_data().map_err(io_err(path))
}

fn replay(dir: &Path, id: &str, bank: &QuestionBank) -> Result<SessionRecord, StoreError> {
    let corrupt = |message: String| StoreError::Corrupt { id: id.to_string(), message };
    let snapshot_path = dir.join(format!("{id}.snapshot.json"));
    let mut record: Option<SessionRecord> = match fs::read(&snapshot_path) {
        Ok(bytes) => Some(serde_json::from_slice(&bytes).map_err(|e| corrupt(format!("snapshot: {e}")))?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(io_err(&snapshot_path)(e)),
    };
    let log_path = dir.join(format!("{id}.jsonl"));
    let mut bytes = fs::read(&log_path).map_err(io_err(&log_path))?;
    // Every event is written as one line ending in a newline, so anything
    // after the last newline is a write cut short by a crash. It was never
    // acknowledged; drop it so later appends start on a fresh line.
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    if complete < bytes.len() {
        tracing::warn!(session = id, "dropping torn final log line");
        bytes.truncate(complete);
        let file = OpenOptions::new().write(true).open(&log_path).map_err(io_err(&log_path))?;
        file.set_len(complete as u64).map_err(io_err(&log_path))?;
        file.sync_all().map_err(io_err(&log_path))?;
    }
    let text = String::from_utf8(bytes).map_err(|e| corrupt(e.to_string()))?;
    for (i, text) in text.lines().enumerate() {
        let line: LogLine = serde_json::from_str(text).map_err(|e| corrupt(format!("line {}: {e}", i + 1)))?;
        match &mut record {
            Some(r) if line.version <= r.version => continue,
            Some(r) => {
                if line.version != r.version + 1 {
                    return Err(corrupt(format!("line {}: version gap after {}", i + 1, r.version)));
                }
                r.apply(&line.event, bank)
                    .map_err(|e| corrupt(format!("line {}: {e}", i + 1)))?;
            }
            None => record = Some(SessionRecord::new(&line.event).map_err(corrupt)?),
        }
    }
    let record = record.ok_or_else(|| corrupt("empty log".into()))?;
    if record.state.session_id != id {
        return Err(corrupt(format!("log holds session {}", record.state.session_id)));
    }
    Ok(record)
}
