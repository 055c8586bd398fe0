use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use ureq::Agent;

use super::{PolicyBackend, PolicyBackendConfig, RolloutGroup};
use crate::error::RolloutError;
use crate::layout::Canvas;
use crate::protocol::{build_prompt, parse_response, CandidateResponse};

const BACKOFF_BASE: Duration = Duration::from_millis(100);
const BACKOFF_CAP: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// OpenAI-compatible chat-completion client. Every candidate is an
/// independent request; failed candidates become empty placeholders.
pub struct RemoteBackend {
    url: String,
    model: String,
    temperature: f64,
    max_retries: u32,
    parallelism: usize,
    token: Option<String>,
    agent: Agent,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fatal(String),
}

impl RemoteBackend {
    pub fn from_config(cfg: &PolicyBackendConfig) -> Result<Self, RolloutError> {
        let endpoint = cfg.endpoint.clone().ok_or_else(|| RolloutError::Config("missing endpoint".into()))?;
        let model = cfg.model_name.clone().ok_or_else(|| RolloutError::Config("missing model name".into()))?;
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") { base.to_string() } else { format!("{base}/chat/completions") };
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            url,
            model,
            temperature: cfg.temperature,
            max_retries: cfg.max_retries,
            parallelism: cfg.parallelism.max(1),
            token: std::env::var(&cfg.api_key_env).ok().filter(|t| !t.is_empty()),
            agent,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(&self, messages: &[ChatMessage]) -> Attempt {
        let body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
        });
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = match req.send_json(&body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        if status >= 400 {
            return Attempt::Fatal(format!("HTTP {status}"));
        }
        let value: Value = match resp.body_mut().read_json() {
            Ok(v) => v,
            Err(e) => return Attempt::Retry(format!("malformed response body: {e}")),
        };
        match value.pointer("/choices/0/message/content").and_then(Value::as_str) {
            Some(content) => Attempt::Done(content.to_string()),
            None => Attempt::Fatal("response has no choices[0].message.content".into()),
        }
    }

    /// One candidate with retries on transport errors, 429 and 5xx.
    pub fn complete(&self, messages: &[ChatMessage]) -> Result<String, String> {
        let mut last = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                thread::sleep((BACKOFF_BASE * 2u32.saturating_pow(attempt - 1)).min(BACKOFF_CAP));
            }
            match self.attempt(messages) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(e) => {
                    log::warn!("chat completion attempt {} failed: {e}", attempt + 1);
                    last = e;
                }
            }
        }
        Err(format!("gave up after {} attempt(s): {last}", self.max_retries + 1))
    }
}

impl PolicyBackend for RemoteBackend {
    fn rollout(&self, canvas: &Canvas, template: &str, group_size: usize) -> Result<RolloutGroup, RolloutError> {
        let prompt = build_prompt(canvas, template).map_err(|e| RolloutError::Config(e.to_string()))?;
        let messages = [
            ChatMessage { role: "system".into(), content: prompt.instructions },
            ChatMessage { role: "user".into(), content: prompt.user },
        ];

        let slots: Vec<Mutex<Option<(Result<String, String>, f64)>>> = (0..group_size).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        thread::scope(|s| {
            for _ in 0..self.parallelism.min(group_size) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= group_size {
                        break;
                    }
                    let started = Instant::now();
                    let result = self.complete(&messages);
                    *slots[i].lock().expect("slot lock") = Some((result, started.elapsed().as_secs_f64()));
                });
            }
        });

        let mut group = RolloutGroup {
            canvas_id: canvas.id.clone(),
            candidates: Vec::with_capacity(group_size),
            latencies: Vec::with_capacity(group_size),
            errors: Vec::with_capacity(group_size),
        };
        let mut last_error = None;
        for slot in slots {
            let (result, latency) = slot.into_inner().expect("slot lock").expect("every slot is filled");
            group.latencies.push(latency);
            match result {
                Ok(text) => {
                    group.candidates.push(parse_response(&text));
                    group.errors.push(None);
                }
                Err(e) => {
                    group.candidates.push(CandidateResponse::default());
                    last_error = Some(e.clone());
                    group.errors.push(Some(e));
                }
            }
        }
        if group.errors.iter().all(Option::is_some) {
            return Err(RolloutError::AllFailed {
                canvas_id: canvas.id.clone(),
                last_error: last_error.unwrap_or_default(),
            });
        }
        Ok(group)
    }
}
