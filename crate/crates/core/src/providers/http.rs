use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tracing::{debug, warn};

use super::{ChatProvider, Completion, PromptBundle, ProviderError, Role, SchemaId};

pub const ENV_ENDPOINT: &str = "PDEFLOW_ENDPOINT";
pub const ENV_MODEL: &str = "PDEFLOW_MODEL";
pub const ENV_API_KEY: &str = "PDEFLOW_API_KEY";

/// Settings for a chat-completions endpoint. `endpoint` is the full URL of
/// the completions route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    pub max_attempts: u32,
    pub backoff_ms: u64,
    /// Directory for request/response traces; none disables tracing.
    pub trace_dir: Option<PathBuf>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            endpoint: String::new(),
            model: String::new(),
            api_key: None,
            timeout_secs: 120,
            max_in_flight: 4,
            max_attempts: 3,
            backoff_ms: 500,
            trace_dir: None,
        }
    }
}

impl HttpConfig {
    /// Overrides endpoint, model and credential from the environment.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(v) = lookup(ENV_ENDPOINT) {
            self.endpoint = v;
        }
        if let Some(v) = lookup(ENV_MODEL) {
            self.model = v;
        }
        if let Some(v) = lookup(ENV_API_KEY) {
            self.api_key = Some(v);
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.endpoint.is_empty() {
            return Err(ProviderError::Config(format!("no endpoint configured (set {ENV_ENDPOINT})")));
        }
        if self.model.is_empty() {
            return Err(ProviderError::Config(format!("no model configured (set {ENV_MODEL})")));
        }
        if self.api_key.as_deref().is_none_or(str::is_empty) {
            return Err(ProviderError::Config(format!("no credential configured (set {ENV_API_KEY})")));
        }
        if self.max_in_flight == 0 || self.max_attempts == 0 {
            return Err(ProviderError::Config("max_in_flight and max_attempts must be positive".into()));
        }
        Ok(())
    }
}

struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

enum Attempt {
    Done(Result<Completion, ProviderError>),
    Retry(String),
}

/// Client for OpenAI-style chat-completions endpoints.
pub struct HttpProvider {
    cfg: HttpConfig,
    agent: ureq::Agent,
    gate: Gate,
    traced: AtomicU64,
}

impl HttpProvider {
    pub fn new(cfg: HttpConfig) -> Result<Self, ProviderError> {
        cfg.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let gate = Gate { free: Mutex::new(cfg.max_in_flight), cv: Condvar::new() };
        Ok(HttpProvider { cfg, agent, gate, traced: AtomicU64::new(0) })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.cfg
    }

    fn request_body(&self, prompt: &PromptBundle) -> Value {
        json!({
            "model": self.cfg.model,
            "temperature": 0,
            "response_format": {"type": "json_object"},
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
        })
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let key = self.cfg.api_key.as_deref().unwrap_or_default();
        let sent = self.agent.post(&self.cfg.endpoint).header("Authorization", &format!("Bearer {key}")).send_json(body);
        let mut resp = match sent {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        match status {
            200..=299 => Attempt::Done(Ok(content_of(&text))),
            401 | 403 => Attempt::Done(Err(ProviderError::Auth { status })),
            429 | 500..=599 => Attempt::Retry(format!("HTTP {status}")),
            _ => Attempt::Done(Err(ProviderError::Status { status, body: text.chars().take(500).collect() })),
        }
    }

    fn trace(&self, role: Role, schema: SchemaId, request: &Value, outcome: &Result<Completion, ProviderError>) {
        let Some(dir) = &self.cfg.trace_dir else { return };
        let n = self.traced.fetch_add(1, Ordering::SeqCst) + 1;
        let response = match outcome {
            Ok(Completion::Record(v)) => json!({"record": v}),
            Ok(Completion::Malformed { raw, reason }) => json!({"malformed": reason, "raw": raw}),
            Err(e) => json!({"error": e.to_string()}),
        };
        let entry = json!({
            "role": role,
            "schema": schema,
            "endpoint": self.cfg.endpoint,
            "authorization": "Bearer [REDACTED]",
            "request": request,
            "response": response,
        });
        let mut text = serde_json::to_string_pretty(&entry).expect("trace serializes");
        if let Some(key) = self.cfg.api_key.as_deref().filter(|k| !k.is_empty()) {
            text = text.replace(key, "[REDACTED]");
        }
        let path = dir.join(format!("{n:04}-{role}.json"));
        if let Err(e) = std::fs::create_dir_all(dir).and_then(|()| std::fs::write(&path, text + "\n")) {
            warn!(path = %path.display(), error = %e, "could not write provider trace");
        }
    }
}

/// Extracts `choices[0].message.content` and parses it as a record.
fn content_of(body: &str) -> Completion {
    let malformed = |reason: String| Completion::Malformed { raw: body.to_string(), reason };
    let v: Value = match serde_json::from_str(body) {
        Ok(v) => v,
        Err(e) => return malformed(format!("response body is not JSON: {e}")),
    };
    match v.pointer("/choices/0/message/content").and_then(Value::as_str) {
        Some(content) => Completion::from_text(content),
        None => malformed("response has no choices[0].message.content".into()),
    }
}

impl ChatProvider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn model(&self) -> &str {
        &self.cfg.model
    }

    fn complete(&self, role: Role, prompt: &PromptBundle, schema: SchemaId, step: u32) -> Result<Completion, ProviderError> {
        let _permit = self.gate.acquire();
        let body = self.request_body(prompt);
        let mut delay = Duration::from_millis(self.cfg.backoff_ms);
        let mut last = String::new();
        for attempt in 1..=self.cfg.max_attempts {
            debug!(%role, step, attempt, "chat completion request");
            match self.attempt(&body) {
                Attempt::Done(outcome) => {
                    self.trace(role, schema, &body, &outcome);
                    return outcome;
                }
                Attempt::Retry(message) => {
                    warn!(%role, attempt, %message, "transient provider failure");
                    last = message;
                    if attempt < self.cfg.max_attempts {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        let outcome = Err(ProviderError::Transport { attempts: self.cfg.max_attempts, message: last });
        self.trace(role, schema, &body, &outcome);
        outcome
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides_file_settings() {
        let mut cfg = HttpConfig { endpoint: "http://a".into(), model: "m".into(), ..Default::default() };
        cfg.apply_env(|k| (k == ENV_API_KEY).then(|| "secret".to_string()));
        assert_eq!(cfg.endpoint, "http://a");
        assert_eq!(cfg.api_key.as_deref(), Some("secret"));
        cfg.apply_env(|k| (k == ENV_MODEL).then(|| "n".to_string()));
        assert_eq!(cfg.model, "n");
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn missing_credential_is_a_config_error() {
        let cfg = HttpConfig { endpoint: "http://a".into(), model: "m".into(), ..Default::default() };
        assert!(matches!(HttpProvider::new(cfg), Err(ProviderError::Config(_))));
    }

    #[test]
    fn credential_is_never_serialized() {
        let cfg = HttpConfig { api_key: Some("secret".into()), ..Default::default() };
        assert!(!serde_json::to_string(&cfg).unwrap().contains("secret"));
    }

    #[test]
    fn content_extraction() {
        let ok = r#"{"choices": [{"message": {"role": "assistant", "content": "{\"x\": 1}"}}]}"#;
        assert_eq!(content_of(ok), Completion::Record(json!({"x": 1})));
        assert!(matches!(content_of("not json"), Completion::Malformed { .. }));
        assert!(matches!(content_of(r#"{"choices": []}"#), Completion::Malformed { .. }));
    }
}
