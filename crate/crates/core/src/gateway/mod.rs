//! Clients for external generation and scoring endpoints.
//!
//! Request bodies by style (all `POST` to `url`, JSON):
//!
//! * `chat`: `{model, messages: [{role: "user", content}], temperature, max_tokens}`,
//!   output at `choices[0].message.content`
//! * `completion`: `{model, prompt, temperature, max_tokens}`, output at `choices[0].text`
//! * `edit`: `{model, input, instruction, temperature}`, output at `choices[0].text`
//!
//! Credentials are read from the environment variable the config names and
//! sent as a bearer token; they never reach logs or run files.

mod prompt;
mod runlog;
mod scorers;
mod transport;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use prompt::{build_prompt, fewshot_rng, FewShotSpec, DEFAULT_SHOTS};
pub use runlog::{RunLog, RunLogEntry};
pub use scorers::{classifier_accuracy, score_formality, semantic_similarity};
pub use transport::{HttpResponse, ReqwestTransport, Transport};

use crate::error::{Error, IoContext, Result};
use crate::rng::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndpointStyle {
    Chat,
    Completion,
    Edit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles after each retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

fn default_attempts() -> u32 {
    3
}
fn default_backoff() -> u64 {
    500
}
fn default_timeout() -> u64 {
    60_000
}
fn default_max_tokens() -> u32 {
    256
}
fn default_in_flight() -> usize {
    4
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: default_attempts(),
            backoff_ms: default_backoff(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub url: String,
    #[serde(default = "default_style")]
    pub style: EndpointStyle,
    #[serde(default)]
    pub model: String,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub retry: RetryPolicy,
    /// 0 means greedy decoding.
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub requests_per_second: Option<f64>,
}

fn default_style() -> EndpointStyle {
    EndpointStyle::Chat
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, style: EndpointStyle) -> Self {
        Self {
            url: url.into(),
            style,
            model: String::new(),
            api_key_env: None,
            timeout_ms: default_timeout(),
            retry: RetryPolicy::default(),
            temperature: 0.0,
            max_tokens: default_max_tokens(),
            max_in_flight: default_in_flight(),
            requests_per_second: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if config.retry.max_attempts == 0 {
            return Err(Error::validation("retry.max_attempts", "must be at least 1"));
        }
        if config.max_in_flight == 0 {
            return Err(Error::validation("max_in_flight", "must be at least 1"));
        }
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).io_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    /// Everything that changes model output, and nothing secret.
    pub fn fingerprint(&self) -> String {
        format!(
            "{}|{:?}|{}|{}|{}",
            self.url, self.style, self.model, self.temperature, self.max_tokens
        )
    }
}

/// Run-log key for one request.
pub fn request_key(config: &EndpointConfig, prompt: &str, instruction: Option<&str>) -> String {
    sha256_hex(format!("{}\u{0}{prompt}\u{0}{}", config.fingerprint(), instruction.unwrap_or("")).as_bytes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub text: String,
    pub attempts: u32,
}

/// One generation request: the prompt, plus the edit instruction for
/// edit-style endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub prompt: String,
    pub instruction: Option<String>,
}

pub struct ModelClient {
    pub config: EndpointConfig,
    transport: Box<dyn Transport>,
    api_key: Option<String>,
    next_slot: Mutex<Instant>,
}

impl ModelClient {
    /// Reads the API key from the configured environment variable, if any.
    pub fn new(config: EndpointConfig, transport: impl Transport + 'static) -> Result<Self> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| Error::Config(format!("environment variable `{var}` is not set")))?,
            ),
            None => None,
        };
        Ok(Self {
            config,
            api_key,
            transport: Box::new(transport),
            next_slot: Mutex::new(Instant::now()),
        })
    }

    fn wait_for_slot(&self) {
        let Some(rps) = self.config.requests_per_second.filter(|r| *r > 0.0) else {
            return;
        };
        let interval = Duration::from_secs_f64(1.0 / rps);
        let wait = {
            let mut next = self.next_slot.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let start = (*next).max(now);
            *next = start + interval;
            start - now
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }

    /// Posts `body` with retries. Returns the parsed JSON and the number of
    /// attempts made.
    pub fn post(&self, body: &Value) -> Result<(Value, u32)> {
        let mut headers = vec![("Content-Type".to_string(), "application/json".to_string())];
        if let Some(key) = &self.api_key {
            headers.push(("Authorization".to_string(), format!("Bearer {key}")));
        }
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let max = self.config.retry.max_attempts.max(1);
        let mut last: Option<Error> = None;
        for attempt in 1..=max {
            if attempt > 1 {
                let backoff = self.config.retry.backoff_ms.saturating_mul(1 << (attempt - 2).min(16));
                thread::sleep(Duration::from_millis(backoff));
            }
            self.wait_for_slot();
            match self.transport.post_json(&self.config.url, &headers, body, timeout) {
                Err(reason) => {
                    last = Some(Error::Network { attempts: attempt, reason });
                }
                Ok(resp) => match resp.status {
                    200..=299 => {
                        if resp.body.trim().is_empty() {
                            return Err(Error::MalformedResponse("empty body".into()));
                        }
                        let value = serde_json::from_str(&resp.body)
                            .map_err(|e| Error::MalformedResponse(format!("invalid JSON: {e}")))?;
                        return Ok((value, attempt));
                    }
                    401 | 403 => return Err(Error::Authentication { status: resp.status }),
                    429 => last = Some(Error::RateLimited { attempts: attempt }),
                    500..=599 => {
                        last = Some(Error::Network {
                            attempts: attempt,
                            reason: format!("status {}", resp.status),
                        })
                    }
                    status => {
                        return Err(Error::Network {
                            attempts: attempt,
                            reason: format!("status {status}"),
                        })
                    }
                },
            }
            log::debug!("attempt {attempt}/{max} to {} failed", self.config.url);
        }
        Err(last.unwrap_or(Error::Network {
            attempts: max,
            reason: "no attempt made".into(),
        }))
    }

    fn request_body(&self, prompt: &str, instruction: Option<&str>) -> Result<Value> {
        let c = &self.config;
        Ok(match c.style {
            EndpointStyle::Chat => json!({
                "model": c.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": c.temperature,
                "max_tokens": c.max_tokens,
            }),
            EndpointStyle::Completion => json!({
                "model": c.model,
                "prompt": prompt,
                "temperature": c.temperature,
                "max_tokens": c.max_tokens,
            }),
            EndpointStyle::Edit => {
                let instruction = instruction
                    .ok_or_else(|| Error::validation("instruction", "edit-style endpoints need an instruction"))?;
                json!({
                    "model": c.model,
                    "input": prompt,
                    "instruction": instruction,
                    "temperature": c.temperature,
                })
            }
        })
    }

    fn extract_text(&self, value: &Value) -> Result<String> {
        let choice = value.pointer("/choices/0");
        let text = match self.config.style {
            EndpointStyle::Chat => choice.and_then(|c| c.pointer("/message/content")),
            EndpointStyle::Completion | EndpointStyle::Edit => choice.and_then(|c| c.get("text")),
        };
        text.and_then(Value::as_str)
            .map(|t| t.trim().to_string())
            .ok_or_else(|| Error::MalformedResponse("no output text in response".into()))
    }

    pub fn generate(&self, prompt: &str, instruction: Option<&str>) -> Result<Generation> {
        let body = self.request_body(prompt, instruction)?;
        let (value, attempts) = self.post(&body)?;
        Ok(Generation {
            text: self.extract_text(&value)?,
            attempts,
        })
    }

    /// Generates outputs for every request, reusing any already in `log` and
    /// appending new ones. At most `max_in_flight` requests run at once.
    /// Results come back in request order.
    pub fn generate_all(&self, requests: &[GenerationRequest], log: &RunLog) -> Vec<Result<String>> {
        let results: Vec<Mutex<Option<Result<String>>>> = requests.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.clamp(1, requests.len().max(1));
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(req) = requests.get(i) else {
                        break;
                    };
                    let key = request_key(&self.config, &req.prompt, req.instruction.as_deref());
                    let outcome = match log.get(&key) {
                        Some(done) => Ok(done),
                        None => self.generate(&req.prompt, req.instruction.as_deref()).and_then(|g| {
                            log.append(&RunLogEntry {
                                key,
                                prompt: req.prompt.clone(),
                                instruction: req.instruction.clone(),
                                output: g.text.clone(),
                                attempts: g.attempts,
                            })?;
                            Ok(g.text)
                        }),
                    };
                    *results[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(outcome);
                });
            }
        });
        results
            .into_iter()
            .map(|m| {
                m.into_inner()
                    .unwrap_or_else(|e| e.into_inner())
                    .unwrap_or_else(|| Err(Error::Network {
                        attempts: 0,
                        reason: "request was not run".into(),
                    }))
            })
            .collect()
    }
}
