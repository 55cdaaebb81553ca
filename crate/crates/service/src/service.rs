use std::sync::{Arc, RwLock};

use axum::http::StatusCode;
use chrono::{DateTime, Utc};
use dss_core::assessment::{start_session, Background, Phase, QuestionBank, ScienceGroup, Subject};
use dss_core::dsl::Program;
use dss_core::kb::{assemble_kb, evaluate_student};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::clock::Clock;
use crate::config::Config;
use crate::error::ApiError;
use crate::store::{Event, SessionRecord, Store, StoredReport};
use crate::StartupError;

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CreateSession {
    pub background: Background,
    pub science_group: ScienceGroup,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SubmitAnswer {
    pub question_id: String,
    pub choice_index: usize,
    /// Rejects the answer with 409 if the session has moved past this version.
    #[serde(default)]
    pub expected_version: Option<u64>,
}

/// A question as shown to the student. Deliberately has no answer key.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct QuestionView {
    pub id: String,
    pub subject: Subject,
    pub prompt: String,
    pub choices: Vec<String>,
    /// 1-based position within the phase.
    pub number: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SessionView {
    pub session_id: String,
    pub phase: Phase,
    pub version: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deadline: Option<DateTime<Utc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remaining_seconds: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub question: Option<QuestionView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_changed: Option<bool>,
    pub finalized: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_url: Option<String>,
}

pub fn report_url(id: &str) -> String {
    format!("/sessions/{id}/report")
}

/// The assessment service without the HTTP layer. Every method takes the
/// session's lock for its whole duration and reads the clock once.
pub struct Service {
    config: Config,
    bank: Arc<QuestionBank>,
    kb: RwLock<Arc<Program>>,
    clock: Arc<dyn Clock>,
    store: Store,
}

impl Service {
    /// Loads the bank and knowledge base and replays persisted sessions.
    pub fn open(config: Config, clock: Arc<dyn Clock>) -> Result<Self, StartupError> {
        let bank = QuestionBank::load(&config.bank)?;
        let kb = assemble_kb(&config.kb, config.shipped_kb)?;
        let store = Store::open(&config.sessions_dir(), config.snapshot_every, &bank)?;
        tracing::info!(sessions = store.len(), rules = kb.rules().count(), "service ready");
        Ok(Service {
            config,
            bank: Arc::new(bank),
            kb: RwLock::new(Arc::new(kb)),
            clock,
            store,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn bank(&self) -> &QuestionBank {
        &self.bank
    }

    /// The knowledge base new evaluations will use.
    pub fn kb(&self) -> Arc<Program> {
        Arc::clone(&self.kb.read().unwrap())
    }

    fn view(&self, record: &SessionRecord, now: DateTime<Utc>) -> SessionView {
        let state = &record.state;
        let finalized = state.phase == Phase::Finalized;
        let deadline = if finalized { None } else { state.deadline() };
        let question = state.current_question().and_then(|(id, number, total)| {
            let q = self.bank.get(id)?;
            Some(QuestionView {
                id: q.id.clone(),
                subject: q.subject,
                prompt: q.prompt.clone(),
                choices: q.choices.clone(),
                number,
                total,
            })
        });
        SessionView {
            session_id: state.session_id.clone(),
            phase: state.phase,
            version: record.version,
            deadline,
            remaining_seconds: deadline.map(|d| ((d - now).num_milliseconds().max(0) + 999) / 1000),
            question,
            phase_changed: None,
            finalized,
            report_url: finalized.then(|| report_url(&state.session_id)),
        }
    }

    fn commit(&self, record: &mut SessionRecord, event: Event) -> Result<(), ApiError> {
        self.store.commit(record, event, &self.bank).map_err(ApiError::storage)
    }

    /// Applies any deadline that has passed and finalizes a session whose
    /// tests are over.
    fn catch_up(&self, record: &mut SessionRecord, now: DateTime<Utc>) -> Result<bool, ApiError> {
        if record.state.phase == Phase::Finalized {
            return Ok(false);
        }
        let advanced = record.state.clone().advance_clock(now);
        if advanced {
            self.commit(record, Event::ClockAdvanced { at: now })?;
        }
        if record.state.is_complete() {
            self.finalize(record, now)?;
        }
        Ok(advanced)
    }

    fn finalize(&self, record: &mut SessionRecord, now: DateTime<Utc>) -> Result<(), ApiError> {
        let (student, scores) = record.state.clone().finalize(&self.bank, now)?;
        // A reload may swap the KB meanwhile; this evaluation keeps the old one.
        let kb = self.kb();
        let (report, evaluation_error) = match evaluate_student(&student, &kb) {
            Ok(advice) => match String::from_utf8(advice.raw) {
                Ok(raw) => (
                    Some(StoredReport {
                        record: student,
                        scores,
                        report: advice.report,
                        raw,
                    }),
                    None,
                ),
                Err(_) => (None, Some("report is not UTF-8".to_string())),
            },
            Err(e) => (None, Some(e.to_string())),
        };
        if let Some(err) = &evaluation_error {
            tracing::error!(session = %record.state.session_id, error = %err, "evaluation failed");
        }
        self.commit(
            record,
            Event::Finalized {
                at: now,
                report,
                evaluation_error,
            },
        )
    }

    fn with_session<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut SessionRecord, DateTime<Utc>) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let handle = self.store.get(id).ok_or_else(|| ApiError::not_found(id))?;
        let mut record = handle.lock().unwrap_or_else(|p| p.into_inner());
        let now = self.clock.now();
        f(&mut record, now)
    }

    pub fn create_session(&self, req: &CreateSession) -> Result<SessionView, ApiError> {
        let now = self.clock.now();
        let id = uuid::Uuid::new_v4().to_string();
        let seed = self.config.seed.unwrap_or_else(|| uuid::Uuid::new_v4().as_u64_pair().0);
        let state = start_session(
            id.clone(),
            &req.background,
            req.science_group,
            &self.bank,
            &self.config.plan(),
            seed,
            now,
        )?;
        let handle = self.store.create(state, now).map_err(ApiError::storage)?;
        let record = handle.lock().unwrap();
        tracing::info!(session = %id, "session created");
        Ok(self.view(&record, now))
    }

    /// Current state, whatever the phase.
    pub fn session(&self, id: &str) -> Result<SessionView, ApiError> {
        self.with_session(id, |record, now| {
            self.catch_up(record, now)?;
            Ok(self.view(record, now))
        })
    }

    pub fn question(&self, id: &str) -> Result<SessionView, ApiError> {
        self.with_session(id, |record, now| {
            self.catch_up(record, now)?;
            if record.state.phase == Phase::Finalized {
                return Err(ApiError::new(StatusCode::CONFLICT, "finalized", "the tests are over")
                    .with("report-url", report_url(id)));
            }
            Ok(self.view(record, now))
        })
    }

    pub fn answer(&self, id: &str, req: &SubmitAnswer) -> Result<SessionView, ApiError> {
        self.with_session(id, |record, now| {
            if let Some(expected) = req.expected_version {
                if expected != record.version {
                    return Err(ApiError::new(
                        StatusCode::CONFLICT,
                        "version-conflict",
                        format!("session is at version {}, not {expected}", record.version),
                    )
                    .with("version", record.version));
                }
            }
            if self.catch_up(record, now)? {
                let view = self.view(record, now);
                let mut err = ApiError::new(StatusCode::GONE, "deadline-expired", "the answer came after the deadline")
                    .with("phase", serde_json::to_value(view.phase).unwrap())
                    .with("finalized", view.finalized)
                    .with("version", view.version);
                if let Some(url) = view.report_url {
                    err = err.with("report-url", url);
                }
                return Err(err);
            }
            // Resending a recorded answer is a no-op, even across a phase change.
            if record.state.answers.get(&req.question_id) == Some(&req.choice_index) {
                let mut view = self.view(record, now);
                view.phase_changed = Some(false);
                return Ok(view);
            }
            let outcome = record
                .state
                .clone()
                .submit_answer(&self.bank, &req.question_id, req.choice_index, now)?;
            self.commit(
                record,
                Event::Answered {
                    question_id: req.question_id.clone(),
                    choice_index: req.choice_index,
                    at: now,
                },
            )?;
            if outcome.complete {
                self.finalize(record, now)?;
            }
            let mut view = self.view(record, now);
            view.phase_changed = Some(outcome.phase_changed || outcome.complete);
            Ok(view)
        })
    }

    /// The stored report of a finalized session.
    pub fn report(&self, id: &str) -> Result<StoredReport, ApiError> {
        self.with_session(id, |record, now| {
            self.catch_up(record, now)?;
            if record.state.phase != Phase::Finalized {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "not-finalized",
                    "the tests are still running",
                )
                .with("phase", serde_json::to_value(record.state.phase).unwrap()));
            }
            match (&record.report, &record.evaluation_error) {
                (Some(report), _) => Ok(report.clone()),
                (None, err) => Err(ApiError::new(
                    StatusCode::INTERNAL_SERVER_ERROR,
                    "evaluation-failed",
                    err.clone().unwrap_or_default(),
                )),
            }
        })
    }

    /// Re-reads the configured KB files and swaps them in if they validate.
    pub fn reload_kb(&self, token: Option<&str>) -> Result<Value, ApiError> {
        let Some(expected) = &self.config.admin_token else {
            return Err(ApiError::new(StatusCode::FORBIDDEN, "admin-disabled", "no admin token is configured"));
        };
        if !token.is_some_and(|t| constant_time_eq(t.as_bytes(), expected.as_bytes())) {
            return Err(ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "bad or missing admin token"));
        }
        let kb = assemble_kb(&self.config.kb, self.config.shipped_kb).map_err(|e| {
            let lines: Vec<String> = e.to_string().lines().map(str::to_string).collect();
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid-kb", "knowledge base rejected; keeping the old one")
                .with("diagnostics", lines)
        })?;
        let body = json!({
            "reloaded": true,
            "templates": kb.templates().count(),
            "rules": kb.rules().count(),
        });
        *self.kb.write().unwrap() = Arc::new(kb);
        tracing::info!(%body, "knowledge base reloaded");
        Ok(body)
    }
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}
