//! Model clients for the pipeline and the request helper every stage uses.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use interviewer_core::llm::{CompletionRequest, LanguageModelClient, LlmError};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::prompts::{sha256_hex, Stage};
use crate::StageFailure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub budget: u32,
    /// Delay before the first retry; doubles each time.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            budget: 2,
            base_delay: Duration::from_millis(250),
        }
    }
}

impl RetryPolicy {
    pub fn immediate(budget: u32) -> Self {
        Self {
            budget,
            base_delay: Duration::ZERO,
        }
    }
}

/// Call `client`, retrying transient failures with exponential backoff.
pub fn complete_with_retry(
    client: &dyn LanguageModelClient,
    request: &CompletionRequest<'_>,
    policy: RetryPolicy,
) -> Result<String, LlmError> {
    let mut attempt = 0;
    loop {
        match client.complete(request) {
            Ok(out) => return Ok(out),
            Err(err) if err.is_transient() && attempt < policy.budget => {
                let delay = policy.base_delay * 2u32.pow(attempt);
                tracing::warn!(stage = request.stage, attempt, error = %err, "retrying model call");
                std::thread::sleep(delay);
                attempt += 1;
            }
            Err(err) => return Err(err),
        }
    }
}

/// One stage call whose answer must pass `validate`.
pub(crate) struct Ask<'a> {
    pub stage: Stage,
    pub prompt: &'a str,
    pub input: &'a str,
    pub temperature: f32,
}

/// Ask, validate, and on a validation failure ask once more with the error
/// appended. A second invalid answer is a stage failure.
pub(crate) fn ask_validated<T>(
    client: &dyn LanguageModelClient,
    policy: RetryPolicy,
    ask: &Ask<'_>,
    validate: impl Fn(&Value) -> Result<T, String>,
) -> Result<T, StageFailure> {
    let mut feedback: Option<String> = None;
    loop {
        let request = CompletionRequest {
            stage: ask.stage.name(),
            prompt: ask.prompt,
            input: ask.input,
            temperature: ask.temperature,
            feedback: feedback.as_deref(),
        };
        let raw = complete_with_retry(client, &request, policy).map_err(StageFailure::Model)?;
        let result = extract_json(&raw).and_then(|v| validate(&v));
        match result {
            Ok(value) => return Ok(value),
            Err(err) if feedback.is_none() => {
                tracing::warn!(stage = %ask.stage, error = %err, "invalid model output, re-prompting");
                feedback = Some(err);
            }
            Err(err) => return Err(StageFailure::Invalid(err)),
        }
    }
}

/// The JSON object in a model reply, tolerating code fences and chatter.
pub fn extract_json(raw: &str) -> Result<Value, String> {
    let start = raw.find('{');
    let end = raw.rfind('}');
    match (start, end) {
        (Some(s), Some(e)) if s < e => {
            serde_json::from_str(&raw[s..=e]).map_err(|err| format!("output is not valid JSON: {err}"))
        }
        _ => Err("output contains no JSON object".into()),
    }
}

pub fn input_hash(input: &str) -> String {
    sha256_hex(input.as_bytes())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub stage: String,
    pub input_hash: String,
    pub output: String,
}

/// Recorded model answers plus the template hash each stage was recorded
/// against.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub pins: BTreeMap<String, String>,
    pub responses: Vec<FixtureEntry>,
}

/// Replays recorded answers keyed by (stage, input hash). A stage whose
/// prompt no longer hashes to its pin fails with [`LlmError::PromptDrift`].
#[derive(Debug, Default)]
pub struct FixtureClient {
    pins: BTreeMap<String, String>,
    responses: HashMap<(String, String), String>,
}

impl FixtureClient {
    pub fn new(file: FixtureFile) -> Self {
        let responses = file
            .responses
            .into_iter()
            .map(|e| ((e.stage, e.input_hash), e.output))
            .collect();
        Self {
            pins: file.pins,
            responses,
        }
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let file: FixtureFile = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Self::new(file))
    }
}

impl LanguageModelClient for FixtureClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, LlmError> {
        if let Some(pinned) = self.pins.get(request.stage) {
            let actual = sha256_hex(request.prompt.as_bytes());
            if &actual != pinned {
                return Err(LlmError::PromptDrift {
                    stage: request.stage.to_string(),
                    pinned: pinned.clone(),
                    actual,
                });
            }
        }
        let key = (request.stage.to_string(), input_hash(request.input));
        self.responses
            .get(&key)
            .cloned()
            .ok_or(LlmError::MissingFixture {
                stage: key.0,
                input_hash: key.1,
            })
    }
}

/// Passes calls through to `inner` and keeps every answer as a fixture.
pub struct RecordingClient<C> {
    inner: C,
    recorded: Mutex<FixtureFile>,
}

impl<C: LanguageModelClient> RecordingClient<C> {
    pub fn new(inner: C) -> Self {
        Self {
            inner,
            recorded: Mutex::new(FixtureFile::default()),
        }
    }

    /// Recorded fixtures, sorted for stable output.
    pub fn fixtures(&self) -> FixtureFile {
        let mut file = self.recorded.lock().unwrap().clone();
        file.responses.sort_by(|a, b| (&a.stage, &a.input_hash).cmp(&(&b.stage, &b.input_hash)));
        file.responses.dedup_by(|a, b| a.stage == b.stage && a.input_hash == b.input_hash);
        file
    }
}

impl<C: LanguageModelClient> LanguageModelClient for RecordingClient<C> {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, LlmError> {
        let output = self.inner.complete(request)?;
        let mut file = self.recorded.lock().unwrap();
        file.pins
            .insert(request.stage.to_string(), sha256_hex(request.prompt.as_bytes()));
        file.responses.push(FixtureEntry {
            stage: request.stage.to_string(),
            input_hash: input_hash(request.input),
            output: output.clone(),
        });
        Ok(output)
    }
}

pub const ENV_ENDPOINT: &str = "INTERVIEWER_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "INTERVIEWER_LLM_API_KEY";
pub const ENV_MODEL: &str = "INTERVIEWER_LLM_MODEL";
pub const ENV_TIMEOUT: &str = "INTERVIEWER_LLM_TIMEOUT_S";

#[derive(Clone, PartialEq)]
pub struct HttpConfig {
    /// Full URL of an OpenAI-compatible chat completions endpoint.
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
}

impl fmt::Debug for HttpConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpConfig")
            .field("endpoint", &self.endpoint)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("model", &self.model)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl HttpConfig {
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let timeout = match get(ENV_TIMEOUT) {
            None => Duration::from_secs(60),
            Some(s) => s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v > 0.0)
                .map(Duration::from_secs_f64)
                .ok_or_else(|| format!("{ENV_TIMEOUT} must be a positive number of seconds"))?,
        };
        let api_key = get(ENV_API_KEY).filter(|k| !k.is_empty());
        let endpoint = get(ENV_ENDPOINT).unwrap_or_else(|| "https://api.openai.com/v1/chat/completions".into());
        if api_key.is_none() && endpoint.starts_with("https://api.openai.com") {
            return Err(format!("{ENV_API_KEY} is not set"));
        }
        Ok(Self {
            endpoint,
            api_key,
            model: get(ENV_MODEL).unwrap_or_else(|| "gpt-4o-mini".into()),
            timeout,
        })
    }
}

/// Client for an OpenAI-compatible chat completions API.
#[derive(Debug)]
pub struct HttpClient {
    config: HttpConfig,
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    pub fn model(&self) -> &str {
        &self.config.model
    }
}

impl LanguageModelClient for HttpClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, LlmError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.full_prompt()},
                {"role": "user", "content": request.input},
            ],
        });
        let mut call = self
            .agent
            .post(&self.config.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            call = call.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = call.send(body.to_string()).map_err(|e| match e {
            ureq::Error::Timeout(_) => LlmError::Timeout,
            other => LlmError::Transport(other.to_string()),
        })?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        match status {
            200..=299 => {}
            408 | 429 | 500..=599 => return Err(LlmError::Transport(format!("HTTP {status}"))),
            _ => return Err(LlmError::BadResponse(format!("HTTP {status}"))),
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| LlmError::BadResponse(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| LlmError::BadResponse("no choices[0].message.content".into()))
    }
}

#[cfg(test)]
mod tests {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    use interviewer_core::llm::ScriptedClient;

    use super::*;

    fn request<'a>(stage: &'a str, prompt: &'a str, input: &'a str) -> CompletionRequest<'a> {
        CompletionRequest {
            stage,
            prompt,
            input,
            temperature: 0.0,
            feedback: None,
        }
    }

    #[test]
    fn retries_transient_errors_within_budget() {
        let client = ScriptedClient::new(vec![Err(LlmError::Timeout), Err(LlmError::Timeout), Ok("done".into())]);
        let out = complete_with_retry(&client, &request("s", "p", "i"), RetryPolicy::immediate(2));
        assert_eq!(out.unwrap(), "done");
        assert_eq!(client.calls().len(), 3);

        let client = ScriptedClient::failing(LlmError::Timeout);
        let out = complete_with_retry(&client, &request("s", "p", "i"), RetryPolicy::immediate(2));
        assert_eq!(out, Err(LlmError::Timeout));
        assert_eq!(client.calls().len(), 3);
    }

    #[test]
    fn permanent_errors_are_not_retried() {
        let client = ScriptedClient::failing(LlmError::BadResponse("x".into()));
        let _ = complete_with_retry(&client, &request("s", "p", "i"), RetryPolicy::immediate(2));
        assert_eq!(client.calls().len(), 1);
    }

    #[test]
    fn json_is_found_inside_fences() {
        let v = extract_json("Sure!\n```json\n{\"a\": 1}\n```").unwrap();
        assert_eq!(v["a"], 1);
        assert!(extract_json("no json here").is_err());
    }

    #[test]
    fn fixtures_replay_and_detect_prompt_drift() {
        let recorder = RecordingClient::new(ScriptedClient::always("{\"ok\": true}"));
        recorder.complete(&request("correct", "template v1", "input A")).unwrap();
        let fixtures = recorder.fixtures();

        let client = FixtureClient::new(fixtures);
        assert_eq!(
            client.complete(&request("correct", "template v1", "input A")).unwrap(),
            "{\"ok\": true}"
        );
        assert!(matches!(
            client.complete(&request("correct", "template v1", "input B")),
            Err(LlmError::MissingFixture { .. })
        ));
        assert!(matches!(
            client.complete(&request("correct", "template v2", "input A")),
            Err(LlmError::PromptDrift { .. })
        ));
    }

    #[test]
    fn api_key_is_redacted() {
        let config = HttpConfig::from_lookup(|k| match k {
            ENV_API_KEY => Some("sk-secret-value".into()),
            _ => None,
        })
        .unwrap();
        let shown = format!("{config:?} {:?}", HttpClient::new(config.clone()));
        assert!(!shown.contains("sk-secret-value"));
        assert!(shown.contains("<redacted>"));
    }

    #[test]
    fn missing_key_for_hosted_endpoint_is_an_error() {
        assert!(HttpConfig::from_lookup(|_| None).is_err());
        assert!(HttpConfig::from_lookup(|k| (k == ENV_TIMEOUT).then(|| "-1".into())).is_err());
    }

    /// Serve `responses` in order, one per connection, and hand back the
    /// request bodies seen.
    fn fake_server(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut bodies = Vec::new();
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                bodies.push(String::from_utf8(buf).unwrap());
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
            bodies
        });
        (url, handle)
    }

    #[test]
    fn http_client_speaks_chat_completions() {
        let reply = r#"{"choices":[{"message":{"role":"assistant","content":"{\"turns\":[]}"}}]}"#;
        let (url, server) = fake_server(vec![(503, "{}".into()), (200, reply.into())]);
        let client = HttpClient::new(HttpConfig {
            endpoint: url,
            api_key: Some("k".into()),
            model: "test-model".into(),
            timeout: Duration::from_secs(5),
        });
        let out = complete_with_retry(&client, &request("correct", "fix it", "{}"), RetryPolicy::immediate(2)).unwrap();
        assert_eq!(out, "{\"turns\":[]}");
        let bodies = server.join().unwrap();
        let sent: Value = serde_json::from_str(&bodies[1]).unwrap();
        assert_eq!(sent["model"], "test-model");
        assert_eq!(sent["temperature"], 0.0);
        assert_eq!(sent["messages"][0]["content"], "fix it");
        assert_eq!(sent["messages"][1]["content"], "{}");
    }

    #[test]
    fn http_client_reports_client_errors_as_bad_response() {
        let (url, server) = fake_server(vec![(400, "{}".into())]);
        let client = HttpClient::new(HttpConfig {
            endpoint: url,
            api_key: None,
            model: "m".into(),
            timeout: Duration::from_secs(5),
        });
        let err = client.complete(&request("correct", "p", "i")).unwrap_err();
        assert!(matches!(err, LlmError::BadResponse(_)));
        server.join().unwrap();
    }
}
