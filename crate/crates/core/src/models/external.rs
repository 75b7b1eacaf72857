//! Prediction protocol clients.
//!
//! Both transports carry the same JSON bodies: a request
//! `{"instances": [[...], ...]}` answered by `{"predictions": [...]}`, one
//! prediction per row in order. A response `{"error": "..."}` reports a
//! failure. Over HTTP the request is a `POST` with content type
//! `application/json` and any non-200 status is an error. Over a subprocess
//! each request and response is a single line on stdin/stdout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::domain::Model;
use crate::error::ModelError;

pub const DEFAULT_HTTP_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub instances: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub predictions: Vec<f64>,
}

impl PredictRequest {
    pub fn encode(rows: &[Vec<f64>]) -> Result<String, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        #[derive(Serialize)]
        struct Borrowed<'a> {
            instances: &'a [Vec<f64>],
        }
        serde_json::to_string(&Borrowed { instances: rows })
            .map_err(|e| ModelError::Transport(format!("cannot encode request: {e}")))
    }
}

impl PredictResponse {
    /// Parses a response body and checks it answers `sent` rows.
    pub fn decode(body: &str, sent: usize) -> Result<Vec<f64>, ModelError> {
        let value: serde_json::Value = serde_json::from_str(body.trim())
            .map_err(|e| ModelError::MalformedResponse(format!("invalid JSON: {e}")))?;
        if let Some(message) = value.get("error") {
            let message = match message {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            return Err(ModelError::Remote(message));
        }
        let predictions = value
            .get("predictions")
            .and_then(serde_json::Value::as_array)
            .ok_or_else(|| ModelError::MalformedResponse("missing `predictions` array".into()))?;
        let predictions = predictions
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_f64().ok_or_else(|| {
                    ModelError::MalformedResponse(format!("prediction {i} is not a number: {v}"))
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if predictions.len() != sent {
            return Err(ModelError::CountMismatch {
                sent,
                received: predictions.len(),
            });
        }
        Ok(predictions)
    }
}

/// Protocol errors worth another attempt; a well-formed answer that is
/// wrong will be wrong again.
fn is_retryable(err: &ModelError) -> bool {
    matches!(err, ModelError::Transport(_))
}

/// Client for a model served over HTTP at `POST <url>`.
#[derive(Debug)]
pub struct HttpModel {
    url: String,
    agent: ureq::Agent,
    retries: u32,
}

impl HttpModel {
    pub fn new(url: impl Into<String>) -> Self {
        Self::with_timeout(url, DEFAULT_HTTP_TIMEOUT)
    }

    pub fn with_timeout(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpModel {
            url: url.into(),
            agent,
            retries: 0,
        }
    }

    /// Extra attempts after a transport failure. Defaults to none.
    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn exchange(&self, body: &str, sent: usize) -> Result<Vec<f64>, ModelError> {
        let mut response = self
            .agent
            .post(&self.url)
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| ModelError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ModelError::Transport(e.to_string()))?;
        if status != 200 {
            return Err(ModelError::Remote(format!(
                "HTTP {status}: {}",
                text.trim()
            )));
        }
        PredictResponse::decode(&text, sent)
    }
}

impl Model for HttpModel {
    fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        let body = PredictRequest::encode(rows)?;
        let mut attempt = 0;
        loop {
            match self.exchange(&body, rows.len()) {
                Err(e) if is_retryable(&e) && attempt < self.retries => attempt += 1,
                other => return other,
            }
        }
    }
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Session {
    fn start(command: &str) -> Result<Self, ModelError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ModelError::Transport(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(Session {
            child,
            stdin,
            stdout,
        })
    }

    fn exchange(&mut self, line: &str, sent: usize) -> Result<Vec<f64>, ModelError> {
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.write_all(b"\n"))
            .and_then(|_| self.stdin.flush())
            .map_err(|e| ModelError::Transport(format!("write to model process: {e}")))?;
        let mut reply = String::new();
        let n = self
            .stdout
            .read_line(&mut reply)
            .map_err(|e| ModelError::Transport(format!("read from model process: {e}")))?;
        if n == 0 {
            return Err(ModelError::Transport(
                "model process closed its output".into(),
            ));
        }
        PredictResponse::decode(&reply, sent)
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A model process speaking the protocol as newline-delimited JSON on its
/// standard streams. The process lives as long as this value; calls are
/// serialized through a lock.
pub struct SubprocessModel {
    command: String,
    session: Mutex<Session>,
    retries: u32,
}

impl std::fmt::Debug for SubprocessModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubprocessModel")
            .field("command", &self.command)
            .field("retries", &self.retries)
            .finish()
    }
}

impl SubprocessModel {
    /// Starts `command` through `sh -c`.
    pub fn spawn(command: &str) -> Result<Self, ModelError> {
        Ok(SubprocessModel {
            command: command.to_owned(),
            session: Mutex::new(Session::start(command)?),
            retries: 0,
        })
    }

    /// Extra attempts after a transport failure; each one restarts the process.
    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }
}

impl Model for SubprocessModel {
    fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        let line = PredictRequest::encode(rows)?;
        let mut session = self
            .session
            .lock()
            .map_err(|_| ModelError::Transport("model session lock poisoned".into()))?;
        let mut attempt = 0;
        loop {
            match session.exchange(&line, rows.len()) {
                Err(e) if is_retryable(&e) && attempt < self.retries => {
                    attempt += 1;
                    *session = Session::start(&self.command)?;
                }
                other => return other,
            }
        }
    }
}
