//! Deterministic offline backends.

use std::collections::VecDeque;
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::{ChatBackend, ChatRequest, EmbeddingBackend, GatewayError};

/// Returns the rendered prompt unchanged.
#[derive(Debug, Default, Clone, Copy)]
pub struct EchoChat;

impl ChatBackend for EchoChat {
    fn id(&self) -> &str {
        "mock-echo"
    }
    fn model(&self) -> &str {
        "echo"
    }
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        Ok(request.rendered_prompt.clone())
    }
}

/// Replays a fixed queue of responses, one per call.
#[derive(Debug)]
pub struct ScriptedChat {
    queue: Mutex<VecDeque<String>>,
}

impl ScriptedChat {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self {
            queue: Mutex::new(responses.into_iter().map(Into::into).collect()),
        }
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().expect("script poisoned").len()
    }
}

impl ChatBackend for ScriptedChat {
    fn id(&self) -> &str {
        "mock-scripted"
    }
    fn model(&self) -> &str {
        "scripted"
    }
    fn complete(&self, _request: &ChatRequest) -> Result<String, GatewayError> {
        self.queue
            .lock()
            .expect("script poisoned")
            .pop_front()
            .ok_or_else(|| GatewayError::Backend("scripted responses exhausted".into()))
    }
    fn is_sequential(&self) -> bool {
        true
    }
}

type Responder = dyn Fn(&ChatRequest) -> Result<String, GatewayError> + Send + Sync;

/// Answers with a closure of the request.
pub struct FnChat {
    id: String,
    f: Box<Responder>,
}

impl FnChat {
    pub fn new(f: impl Fn(&ChatRequest) -> Result<String, GatewayError> + Send + Sync + 'static) -> Self {
        Self {
            id: "mock-fn".into(),
            f: Box::new(f),
        }
    }

    /// Distinct ids keep differently behaving closures apart in a shared cache.
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

impl ChatBackend for FnChat {
    fn id(&self) -> &str {
        &self.id
    }
    fn model(&self) -> &str {
        "fn"
    }
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        (self.f)(request)
    }
}

fn seeded_gaussian(seed_text: &str, salt: &str, dim: usize) -> Vec<f64> {
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update([0u8]);
    h.update(seed_text.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(digest);
    (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Pseudo-random Gaussian vector seeded by a hash of the whole text.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        Self { dim: dim.max(1) }
    }
}

impl EmbeddingBackend for HashEmbedder {
    fn id(&self) -> &str {
        "mock-hash"
    }
    fn model(&self) -> &str {
        "hash"
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError> {
        Ok(texts.iter().map(|t| seeded_gaussian(t, "text", self.dim)).collect())
    }
}

const STOPWORDS: &[&str] = &[
    "the", "and", "for", "that", "with", "this", "from", "are", "was", "were", "has", "have", "had", "its", "their",
    "his", "her", "they", "them", "but", "not", "been", "will", "would", "about", "into", "over", "after", "than",
    "which", "while", "also", "said", "says", "who", "what", "when", "where", "how", "all", "can", "could", "should",
    "more", "most", "other", "some", "such", "only", "any", "each", "our", "out", "one", "two", "new",
];

/// Bag-of-words embedder: the sum of per-token hashed Gaussian vectors, so
/// texts sharing vocabulary land close together. Falls back to the whole-text
/// hash when no content token survives filtering.
#[derive(Debug, Clone)]
pub struct TokenHashEmbedder {
    dim: usize,
}

impl TokenHashEmbedder {
    pub fn new(dim: usize) -> Self {
        Self { dim: dim.max(1) }
    }

    pub fn tokens(text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .map(str::to_lowercase)
            .filter(|t| t.chars().count() >= 3 && !STOPWORDS.contains(&t.as_str()))
            .collect()
    }

    fn vector(&self, text: &str) -> Vec<f64> {
        let toks = Self::tokens(text);
        if toks.is_empty() {
            return seeded_gaussian(text, "text", self.dim);
        }
        let mut acc = vec![0.0; self.dim];
        for t in toks {
            for (a, x) in acc.iter_mut().zip(seeded_gaussian(&t, "token", self.dim)) {
                *a += x;
            }
        }
        acc
    }
}

impl EmbeddingBackend for TokenHashEmbedder {
    fn id(&self) -> &str {
        "mock-token-hash"
    }
    fn model(&self) -> &str {
        "token-hash"
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}
