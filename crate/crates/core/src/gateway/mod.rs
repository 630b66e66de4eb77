//! Chat-completion and embedding access with caching, retries, rate limiting
//! and an in-flight bound. Backends are trait objects so tests and offline
//! runs use the mocks in [`mock`].

mod cache;
pub mod heuristic;
pub mod http;
mod limit;
pub mod mock;

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CacheEntry, CacheKey, DiskCache};
pub use limit::{InFlight, RateLimiter, RetryPolicy};

use crate::vector::{EmbeddingVector, VectorError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub template_id: String,
    pub rendered_prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub few_shot: Vec<(String, String)>,
}

impl ChatRequest {
    pub fn new(template_id: impl Into<String>, rendered_prompt: impl Into<String>) -> Self {
        Self {
            template_id: template_id.into(),
            rendered_prompt: rendered_prompt.into(),
            temperature: 0.0,
            max_tokens: 1024,
            few_shot: Vec::new(),
        }
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.rendered_prompt.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("empty prompt".into()));
        }
        if self.template_id.is_empty() {
            return Err(GatewayError::InvalidRequest("empty template id".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GatewayError::InvalidRequest(format!("bad temperature {}", self.temperature)));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Prompt text plus few-shot pairs, as hashed into the cache key.
    fn key_text(&self) -> String {
        let mut s = self.rendered_prompt.clone();
        for (i, o) in &self.few_shot {
            s.push('\u{1f}');
            s.push_str(i);
            s.push('\u{1f}');
            s.push_str(o);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("backend rejected the content: {0}")]
    Content(String),
    #[error("transient backend failure: {0}")]
    Transient(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bad embedding: {0}")]
    BadVector(#[from] VectorError),
    #[error("cache: {0}")]
    Cache(String),
    #[error("backend error: {0}")]
    Backend(String),
}

pub trait ChatBackend: Send + Sync {
    fn id(&self) -> &str;
    fn model(&self) -> &str;
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError>;
    /// Backends whose answers depend on call order (scripted queues) are
    /// never fanned out.
    fn is_sequential(&self) -> bool {
        false
    }
}

pub trait EmbeddingBackend: Send + Sync {
    fn id(&self) -> &str;
    fn model(&self) -> &str;
    /// Raw vectors, one per text, not necessarily normalized.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub retry: RetryPolicy,
    /// `None` disables rate limiting.
    pub requests_per_minute: Option<u32>,
    pub max_in_flight: usize,
    pub cache_dir: Option<PathBuf>,
    pub embed_batch_size: usize,
    /// Keep every chat request for later inspection.
    pub record_prompts: bool,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            retry: RetryPolicy::default(),
            requests_per_minute: None,
            max_in_flight: 8,
            cache_dir: None,
            embed_batch_size: 64,
            record_prompts: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayStats {
    pub chat_calls: u64,
    pub chat_cache_hits: u64,
    pub embed_calls: u64,
    pub embed_cache_hits: u64,
    pub retries: u64,
}

#[derive(Default)]
struct Counters {
    chat_calls: AtomicU64,
    chat_cache_hits: AtomicU64,
    embed_calls: AtomicU64,
    embed_cache_hits: AtomicU64,
    retries: AtomicU64,
}

pub struct Gateway {
    chat: Arc<dyn ChatBackend>,
    embedder: Arc<dyn EmbeddingBackend>,
    cache: Option<DiskCache>,
    retry: RetryPolicy,
    limiter: Option<RateLimiter>,
    in_flight: InFlight,
    batch_size: usize,
    counters: Counters,
    prompts: Option<Mutex<Vec<ChatRequest>>>,
}

impl Gateway {
    pub fn new(
        chat: Arc<dyn ChatBackend>,
        embedder: Arc<dyn EmbeddingBackend>,
        config: &GatewayConfig,
    ) -> Result<Self, GatewayError> {
        Ok(Self {
            chat,
            embedder,
            cache: config.cache_dir.as_ref().map(DiskCache::open).transpose()?,
            retry: config.retry,
            limiter: config.requests_per_minute.map(RateLimiter::per_minute),
            in_flight: InFlight::new(config.max_in_flight),
            batch_size: config.embed_batch_size.max(1),
            counters: Counters::default(),
            prompts: config.record_prompts.then(|| Mutex::new(Vec::new())),
        })
    }

    /// Uncached gateway with no retry delay, for tests.
    pub fn uncached(chat: Arc<dyn ChatBackend>, embedder: Arc<dyn EmbeddingBackend>) -> Self {
        let config = GatewayConfig {
            retry: RetryPolicy::no_delay(3),
            ..GatewayConfig::default()
        };
        Self::new(chat, embedder, &config).expect("no cache to open")
    }

    pub fn stats(&self) -> GatewayStats {
        let c = &self.counters;
        GatewayStats {
            chat_calls: c.chat_calls.load(Ordering::Relaxed),
            chat_cache_hits: c.chat_cache_hits.load(Ordering::Relaxed),
            embed_calls: c.embed_calls.load(Ordering::Relaxed),
            embed_cache_hits: c.embed_cache_hits.load(Ordering::Relaxed),
            retries: c.retries.load(Ordering::Relaxed),
        }
    }

    /// Drains the recorded requests (empty unless `record_prompts` is set).
    pub fn take_prompts(&self) -> Vec<ChatRequest> {
        self.prompts
            .as_ref()
            .map(|m| std::mem::take(&mut *m.lock().expect("prompt log poisoned")))
            .unwrap_or_default()
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        request.validate()?;
        if let Some(log) = &self.prompts {
            log.lock().expect("prompt log poisoned").push(request.clone());
        }
        let key = CacheKey::new(
            self.chat.id(),
            self.chat.model(),
            &request.template_id,
            &request.key_text(),
            request.temperature,
            request.max_tokens,
        );
        if let Some(CacheEntry::Chat { text }) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            self.counters.chat_cache_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(text);
        }
        let text = self.with_retries(|| {
            self.counters.chat_calls.fetch_add(1, Ordering::Relaxed);
            self.chat.complete(request)
        })?;
        if let Some(c) = &self.cache {
            c.put(&key, &CacheEntry::Chat { text: text.clone() })?;
        }
        Ok(text)
    }

    /// Results in request order. Fans out unless the backend is sequential.
    pub fn complete_many(&self, requests: &[ChatRequest]) -> Vec<Result<String, GatewayError>> {
        if self.chat.is_sequential() {
            requests.iter().map(|r| self.complete(r)).collect()
        } else {
            requests.par_iter().map(|r| self.complete(r)).collect()
        }
    }

    pub fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::InvalidRequest("no texts to embed".into()));
        }
        if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
            return Err(GatewayError::InvalidRequest(format!("text {i} is empty")));
        }
        let keys: Vec<CacheKey> = texts
            .iter()
            .map(|t| CacheKey::new(self.embedder.id(), self.embedder.model(), "embed", t, 0.0, 1))
            .collect();
        let mut out: Vec<Option<Vec<f64>>> = keys
            .iter()
            .map(|k| match self.cache.as_ref().and_then(|c| c.get(k)) {
                Some(CacheEntry::Embedding { values }) => {
                    self.counters.embed_cache_hits.fetch_add(1, Ordering::Relaxed);
                    Some(values)
                }
                _ => None,
            })
            .collect();
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        for chunk in missing.chunks(self.batch_size) {
            let batch: Vec<String> = chunk.iter().map(|&i| texts[i].clone()).collect();
            let vectors = self.with_retries(|| {
                self.counters.embed_calls.fetch_add(1, Ordering::Relaxed);
                self.embedder.embed(&batch)
            })?;
            if vectors.len() != batch.len() {
                return Err(GatewayError::Backend(format!(
                    "asked for {} embeddings, got {}",
                    batch.len(),
                    vectors.len()
                )));
            }
            for (&i, v) in chunk.iter().zip(vectors) {
                let unit = EmbeddingVector::normalized(v)?;
                if let Some(c) = &self.cache {
                    c.put(
                        &keys[i],
                        &CacheEntry::Embedding {
                            values: unit.as_slice().to_vec(),
                        },
                    )?;
                }
                out[i] = Some(unit.as_slice().to_vec());
            }
        }
        let mut result = Vec::with_capacity(texts.len());
        let mut dim = None;
        for v in out {
            let v = EmbeddingVector::normalized(v.expect("every slot filled"))?;
            match dim {
                None => dim = Some(v.dim()),
                Some(d) if d != v.dim() => {
                    return Err(GatewayError::DimensionMismatch {
                        expected: d,
                        got: v.dim(),
                    })
                }
                _ => {}
            }
            result.push(v);
        }
        Ok(result)
    }

    pub fn embed_one(&self, text: &str) -> Result<EmbeddingVector, GatewayError> {
        Ok(self.embed(&[text.to_string()])?.remove(0))
    }

    fn with_retries<T>(&self, mut call: impl FnMut() -> Result<T, GatewayError>) -> Result<T, GatewayError> {
        let attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            if let Some(l) = &self.limiter {
                l.acquire();
            }
            let res = {
                let _permit = self.in_flight.acquire();
                call()
            };
            match res {
                Err(GatewayError::Transient(msg)) => {
                    if attempt >= attempts {
                        return Err(GatewayError::RetriesExhausted { attempts, last: msg });
                    }
                    self.counters.retries.fetch_add(1, Ordering::Relaxed);
                    let wait = self.retry.delay(attempt);
                    tracing::debug!(attempt, ?wait, error = %msg, "retrying backend call");
                    std::thread::sleep(wait);
                }
                other => return other,
            }
        }
    }
}
