//! Chat-completions HTTP provider, concurrency limits and transcripts.

use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};
use stereoscan_core::rater::{
    rate_repetition, Provider, RaterError, RaterRequest, RatingRun, RepetitionOutcome,
};

pub const API_KEY_ENV: &str = "STEREOSCAN_API_KEY";
pub const BASE_URL_ENV: &str = "STEREOSCAN_BASE_URL";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4.1-2025-04-14";
pub const DEFAULT_CONCURRENCY: usize = 4;

/// OpenAI-compatible `POST {base_url}/chat/completions` client. Images are
/// sent as base64 PNG data URLs after the prompt text.
pub struct HttpProvider {
    agent: ureq::Agent,
    base_url: String,
    api_key: Option<String>,
    /// Retries after the first attempt for 429, 5xx and transport errors.
    pub max_retries: u32,
    /// Delay before retry `k` is `backoff * 2^k`.
    pub backoff: Duration,
}

impl HttpProvider {
    pub fn new(base_url: &str, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpProvider {
            agent,
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            max_retries: 4,
            backoff: Duration::from_millis(500),
        }
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url)
    }
}

/// Request body in the chat-completions wire format.
pub fn request_body(request: &RaterRequest) -> Value {
    let mut content = vec![json!({"type": "text", "text": request.prompt_text})];
    for img in &request.images {
        let data = base64::engine::general_purpose::STANDARD.encode(&img.png);
        content.push(json!({
            "type": "image_url",
            "image_url": {"url": format!("data:image/png;base64,{data}")},
        }));
    }
    let mut body = json!({
        "model": request.model_name,
        "messages": [{"role": "user", "content": content}],
    });
    if let Some(t) = request.temperature {
        body["temperature"] = json!(t);
    }
    body
}

/// Assistant text from a chat-completions response body.
pub fn response_text(body: &Value) -> Option<String> {
    let content = body.pointer("/choices/0/message/content")?;
    match content {
        Value::String(s) => Some(s.clone()),
        Value::Array(parts) => Some(parts.iter().filter_map(|p| p.get("text")?.as_str()).collect::<Vec<_>>().join("")),
        _ => None,
    }
}

fn retryable(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

impl Provider for HttpProvider {
    fn complete(&self, request: &RaterRequest) -> Result<String, RaterError> {
        let body = serde_json::to_vec(&request_body(request)).expect("JSON values serialize");
        let mut attempt = 0;
        loop {
            let mut req = self.agent.post(self.endpoint()).header("Content-Type", "application/json");
            if let Some(key) = &self.api_key {
                req = req.header("Authorization", format!("Bearer {key}"));
            }
            let err = match req.send(&body[..]) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    if (200..300).contains(&status) {
                        let value: Value = serde_json::from_str(&text)
                            .map_err(|e| RaterError::Provider { status: Some(status), body: format!("{e}: {text}") })?;
                        return response_text(&value)
                            .ok_or(RaterError::Provider { status: Some(status), body: text });
                    }
                    let err = RaterError::Provider { status: Some(status), body: text };
                    if !retryable(status) {
                        return Err(err);
                    }
                    err
                }
                Err(e) => RaterError::Provider { status: None, body: e.to_string() },
            };
            if attempt >= self.max_retries {
                return Err(err);
            }
            std::thread::sleep(self.backoff * 2u32.saturating_pow(attempt));
            attempt += 1;
        }
    }
}

/// Caps the number of in-flight calls to the wrapped provider, across all
/// threads sharing it.
pub struct Limited<P> {
    inner: P,
    max: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl<P: Provider> Limited<P> {
    pub fn new(inner: P, max: usize) -> Self {
        Limited { inner, max: max.max(1), in_flight: Mutex::new(0), freed: Condvar::new() }
    }
}

impl<P: Provider> Provider for Limited<P> {
    fn complete(&self, request: &RaterRequest) -> Result<String, RaterError> {
        {
            let mut n = self.in_flight.lock().expect("lock");
            while *n >= self.max {
                n = self.freed.wait(n).expect("lock");
            }
            *n += 1;
        }
        let out = self.inner.complete(request);
        *self.in_flight.lock().expect("lock") -= 1;
        self.freed.notify_one();
        out
    }
}

/// Runs the repetitions on up to `concurrency` threads; outcomes are
/// sorted by repetition afterwards.
pub fn rate_concurrent(
    project_id: &str,
    request: &RaterRequest,
    provider: &dyn Provider,
    repeats: u32,
    concurrency: usize,
) -> RatingRun {
    let next = AtomicU32::new(0);
    let results: Mutex<Vec<RepetitionOutcome>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..concurrency.clamp(1, repeats.max(1) as usize) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= repeats {
                    break;
                }
                let outcome = rate_repetition(request, provider, i);
                results.lock().expect("lock").push(outcome);
            });
        }
    });
    RatingRun::new(project_id, request, results.into_inner().expect("lock"))
}

/// One JSONL line per attempt (and per provider error) of a run.
pub fn transcript_lines(request: &RaterRequest, run: &RatingRun) -> Vec<String> {
    let images: Vec<Value> =
        request.images.iter().map(|i| json!({"label": i.label, "bytes": i.png.len()})).collect();
    let mut out = Vec::new();
    for o in &run.outcomes {
        let base = |attempt: usize| {
            json!({
                "project": run.project_id,
                "variant": run.variant.as_str(),
                "model": run.model_name,
                "temperature": request.temperature,
                "repetition": o.repetition,
                "attempt": attempt,
                "prompt": request.prompt_text,
                "images": images,
            })
        };
        for (attempt, text) in o.transcripts.iter().enumerate() {
            let mut line = base(attempt);
            line["response"] = json!(text);
            out.push(line.to_string());
        }
        if let Err(e) = &o.result {
            let mut line = base(o.transcripts.len());
            line["error"] = json!(e.to_string());
            out.push(line.to_string());
        }
    }
    out
}

pub fn append_lines(path: &Path, lines: &[String]) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    for l in lines {
        writeln!(f, "{l}")?;
    }
    Ok(())
}
