//! Blocking HTTP client and the failure taxonomy behind the exit codes.

use serde_json::{json, Value};

use crate::{EXIT_DENIED, EXIT_INVALID, EXIT_TRANSPORT};

#[derive(Debug)]
pub enum Failure {
    /// The server answered with an error document.
    Api { status: u16, body: Value },
    /// No usable answer: connection, protocol or body trouble.
    Transport(String),
    /// Bad local input: arguments, files, configuration.
    Usage(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Api {
                status: 400 | 422, ..
            }
            | Failure::Usage(_) => EXIT_INVALID,
            Failure::Api {
                status: 401 | 403 | 409,
                ..
            } => EXIT_DENIED,
            Failure::Api { .. } | Failure::Transport(_) => EXIT_TRANSPORT,
        }
    }

    /// Machine-readable form written to the error stream in `--json` mode.
    pub fn document(&self) -> Value {
        match self {
            Failure::Api { status, body } => {
                let mut doc = match body.get("error") {
                    Some(error) => json!({"error": error}),
                    None => json!({"error": {"code": "http_error", "message": body.to_string()}}),
                };
                doc["status"] = json!(status);
                doc
            }
            Failure::Transport(message) => {
                json!({"error": {"code": "transport", "message": message}})
            }
            Failure::Usage(message) => json!({"error": {"code": "usage", "message": message}}),
        }
    }
}

pub struct Client {
    base: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl Client {
    pub fn new(base: &str, token: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base: base.trim_end_matches('/').to_string(),
            token,
            agent,
        }
    }

    fn auth(&self) -> Option<String> {
        self.token.as_ref().map(|t| format!("Bearer {t}"))
    }

    pub fn get(&self, path: &str) -> Result<Value, Failure> {
        let mut request = self.agent.get(format!("{}{path}", self.base));
        if let Some(auth) = self.auth() {
            request = request.header("Authorization", auth);
        }
        finish(request.call())
    }

    pub fn post(&self, path: &str, body: &Value) -> Result<Value, Failure> {
        self.post_bytes(path, body.to_string().into_bytes())
    }

    pub fn post_bytes(&self, path: &str, body: Vec<u8>) -> Result<Value, Failure> {
        let mut request = self
            .agent
            .post(format!("{}{path}", self.base))
            .header("Content-Type", "application/json");
        if let Some(auth) = self.auth() {
            request = request.header("Authorization", auth);
        }
        finish(request.send(&body[..]))
    }
}

fn finish(result: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Result<Value, Failure> {
    let mut response = result.map_err(|e| Failure::Transport(e.to_string()))?;
    let status = response.status().as_u16();
    let raw = response
        .body_mut()
        .read_to_vec()
        .map_err(|e| Failure::Transport(format!("cannot read response: {e}")))?;
    let body: Value = if raw.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&raw)
            .map_err(|e| Failure::Transport(format!("response is not JSON ({status}): {e}")))?
    };
    if (200..300).contains(&status) {
        Ok(body)
    } else {
        Err(Failure::Api { status, body })
    }
}
