//! HTTP backends speaking the chat-completions and embeddings wire shape.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ChatBackend, ChatRequest, EmbeddingBackend, GatewayError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpBackendConfig {
    /// Full endpoint URL, e.g. `https://host/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// Read from the environment by the caller; `None` sends no auth header.
    #[serde(skip)]
    pub api_key: Option<String>,
    pub timeout_secs: u64,
}

fn agent(timeout_secs: u64) -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(timeout_secs.max(1))))
        .build()
        .into()
}

/// Maps a status code and body to the gateway's error classes.
pub fn classify_status(status: u16, body: &str) -> Result<(), GatewayError> {
    let snippet: String = body.chars().take(300).collect();
    match status {
        200..=299 => Ok(()),
        401 | 403 => Err(GatewayError::Auth(format!("HTTP {status}: {snippet}"))),
        408 | 409 | 429 | 500..=599 => Err(GatewayError::Transient(format!("HTTP {status}: {snippet}"))),
        400 | 413 | 422 => Err(GatewayError::Content(format!("HTTP {status}: {snippet}"))),
        _ => Err(GatewayError::Backend(format!("HTTP {status}: {snippet}"))),
    }
}

fn post_json(agent: &ureq::Agent, cfg: &HttpBackendConfig, body: &Value) -> Result<Value, GatewayError> {
    let mut req = agent.post(&cfg.endpoint).header("Content-Type", "application/json");
    if let Some(key) = &cfg.api_key {
        req = req.header("Authorization", format!("Bearer {key}"));
    }
    let payload = serde_json::to_string(body).map_err(|e| GatewayError::InvalidRequest(e.to_string()))?;
    let mut resp = req
        .send(payload)
        .map_err(|e| GatewayError::Transient(format!("request failed: {e}")))?;
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| GatewayError::Transient(format!("reading response: {e}")))?;
    classify_status(status, &text)?;
    serde_json::from_str(&text).map_err(|e| GatewayError::Backend(format!("response is not JSON: {e}")))
}

pub struct HttpChat {
    cfg: HttpBackendConfig,
    agent: ureq::Agent,
}

impl HttpChat {
    pub fn new(cfg: HttpBackendConfig) -> Self {
        Self {
            agent: agent(cfg.timeout_secs),
            cfg,
        }
    }

    pub fn request_body(&self, request: &ChatRequest) -> Value {
        let mut messages = Vec::new();
        for (input, output) in &request.few_shot {
            messages.push(json!({"role": "user", "content": input}));
            messages.push(json!({"role": "assistant", "content": output}));
        }
        messages.push(json!({"role": "user", "content": request.rendered_prompt}));
        json!({
            "model": self.cfg.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }
}

impl ChatBackend for HttpChat {
    fn id(&self) -> &str {
        "http-chat"
    }
    fn model(&self) -> &str {
        &self.cfg.model
    }
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let v = post_json(&self.agent, &self.cfg, &self.request_body(request))?;
        if let Some(err) = v.get("error") {
            return Err(GatewayError::Content(err.to_string()));
        }
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| GatewayError::Backend("response has no choices[0].message.content".into()))
    }
}

pub struct HttpEmbedder {
    cfg: HttpBackendConfig,
    agent: ureq::Agent,
}

impl HttpEmbedder {
    pub fn new(cfg: HttpBackendConfig) -> Self {
        Self {
            agent: agent(cfg.timeout_secs),
            cfg,
        }
    }
}

impl EmbeddingBackend for HttpEmbedder {
    fn id(&self) -> &str {
        "http-embed"
    }
    fn model(&self) -> &str {
        &self.cfg.model
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError> {
        let v = post_json(&self.agent, &self.cfg, &json!({"model": self.cfg.model, "input": texts}))?;
        let data = v
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| GatewayError::Backend("response has no data array".into()))?;
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(data.len());
        for (pos, item) in data.iter().enumerate() {
            let index = item.get("index").and_then(Value::as_u64).map_or(pos, |i| i as usize);
            let values = item
                .get("embedding")
                .and_then(Value::as_array)
                .ok_or_else(|| GatewayError::Backend(format!("data[{pos}] has no embedding")))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| GatewayError::Backend("non-numeric embedding".into())))
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push((index, values));
        }
        rows.sort_by_key(|r| r.0);
        Ok(rows.into_iter().map(|r| r.1).collect())
    }
}
