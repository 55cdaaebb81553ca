#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use chrono::{DateTime, TimeZone, Utc};
use dss_core::assessment::{Question, QuestionBank};
use dss_service::{router, Config, ManualClock, Service};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 9, 1, 9, 0, 0).unwrap()
}

pub fn config_text(data_dir: &Path, extra: &str) -> String {
    format!(
        "data-dir = {:?}\nbank = {:?}\nseed = 11\nadmin-token = \"s3cret\"\n{extra}\n",
        data_dir,
        fixtures().join("question-bank.txt")
    )
}

pub struct Harness {
    pub dir: tempfile::TempDir,
    pub clock: Arc<ManualClock>,
    pub bank: QuestionBank,
    pub extra: String,
    pub app: Router,
}

impl Harness {
    pub fn new() -> Self {
        Self::with_config("")
    }

    pub fn with_config(extra: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(ManualClock::new(t0()));
        let app = Self::app(dir.path(), extra, &clock);
        Harness {
            dir,
            clock,
            bank: QuestionBank::load(&fixtures().join("question-bank.txt")).unwrap(),
            extra: extra.to_string(),
            app,
        }
    }

    fn app(dir: &Path, extra: &str, clock: &Arc<ManualClock>) -> Router {
        let config = Config::from_toml(&config_text(dir, extra)).unwrap();
        router(Arc::new(Service::open(config, clock.clone()).unwrap()))
    }

    /// Simulates a process restart over the same data directory.
    pub fn restart(&mut self) {
        self.app = Self::app(self.dir.path(), &self.extra, &self.clock);
    }

    pub async fn send(&self, method: Method, uri: &str, body: Option<Value>, token: Option<&str>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(token) = token {
            req = req.header(header::AUTHORIZATION, format!("Bearer {token}"));
        }
        let req = match body {
            Some(v) => req
                .header(header::CONTENT_TYPE, "application/json")
                .body(Body::from(v.to_string()))
                .unwrap(),
            None => req.body(Body::empty()).unwrap(),
        };
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    pub async fn json(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (status, bytes) = self.send(method, uri, body, None).await;
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    pub async fn create(&self, body: Value) -> String {
        let (status, v) = self.json(Method::POST, "/sessions", Some(body)).await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        v["session-id"].as_str().unwrap().to_string()
    }

    pub async fn question(&self, id: &str) -> (StatusCode, Value) {
        self.json(Method::GET, &format!("/sessions/{id}/question"), None).await
    }

    pub async fn answer(&self, id: &str, question: &str, choice: usize) -> (StatusCode, Value) {
        let body = json!({"question-id": question, "choice-index": choice});
        self.json(Method::POST, &format!("/sessions/{id}/answer"), Some(body)).await
    }

    pub fn question_of(&self, view: &Value) -> &Question {
        self.bank.get(view["question"]["id"].as_str().unwrap()).unwrap()
    }

    /// Answers every remaining question, choosing with `pick`, and returns
    /// the final answer's response.
    pub async fn answer_all(&self, id: &str, mut pick: impl FnMut(&Question) -> usize) -> Value {
        loop {
            let (status, view) = self.question(id).await;
            assert_eq!(status, StatusCode::OK, "{view}");
            let q = self.question_of(&view).clone();
            let (status, after) = self.answer(id, &q.id, pick(&q)).await;
            assert_eq!(status, StatusCode::OK, "{after}");
            if after["finalized"] == true {
                return after;
            }
        }
    }
}

pub fn background() -> Value {
    json!({
        "stdid": 1,
        "name": "Ali",
        "age": 19,
        "academic-per": 60,
        "academic-type": "Science",
        "hssc-year": 2009,
    })
}

pub fn create_body(group: &str) -> Value {
    json!({"background": background(), "science-group": group})
}

pub fn wrong(q: &Question) -> usize {
    (q.correct_index + 1) % q.choices.len()
}
