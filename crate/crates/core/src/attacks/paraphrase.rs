//! Client for an external paraphrasing service.
//!
//! Wire format: `POST {base}/paraphrase` with JSON body `{"text": "..."}`;
//! the service answers `200` with `{"text": "..."}`.

use std::io::ErrorKind;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::AttackError;

pub const PARAPHRASE_PATH: &str = "/paraphrase";
pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphraseEndpoint {
    /// Base URL, e.g. `http://127.0.0.1:8080`.
    pub base_url: String,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

impl ParaphraseEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self { base_url: base_url.into(), timeout_ms: DEFAULT_TIMEOUT_MS }
    }

    pub fn url(&self) -> String {
        format!("{}{}", self.base_url.trim_end_matches('/'), PARAPHRASE_PATH)
    }
}

#[derive(Serialize)]
struct Request<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct Response {
    text: String,
}

/// Sends `text` to the endpoint and returns the paraphrase verbatim.
pub fn paraphrase_external(endpoint: &ParaphraseEndpoint, text: &str) -> Result<String, AttackError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_millis(endpoint.timeout_ms)))
        .http_status_as_error(false)
        .build()
        .into();
    let body = serde_json::to_string(&Request { text }).map_err(|e| AttackError::MalformedResponse(e.to_string()))?;
    let mut response = agent
        .post(&endpoint.url())
        .header("content-type", "application/json")
        .send(body.as_str())
        .map_err(network_error)?;
    let status = response.status().as_u16();
    let raw = response.body_mut().read_to_string().map_err(network_error)?;
    if status != 200 {
        return Err(AttackError::Network(format!("paraphraser answered HTTP {status}")));
    }
    serde_json::from_str::<Response>(&raw)
        .map(|r| r.text)
        .map_err(|e| AttackError::MalformedResponse(format!("{e}: {}", raw.chars().take(200).collect::<String>())))
}

fn network_error(e: ureq::Error) -> AttackError {
    match e {
        ureq::Error::Timeout(t) => AttackError::Timeout(t.to_string()),
        ureq::Error::Io(io) if matches!(io.kind(), ErrorKind::TimedOut | ErrorKind::WouldBlock) => AttackError::Timeout(io.to_string()),
        other => AttackError::Network(other.to_string()),
    }
}
