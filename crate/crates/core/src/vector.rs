//! Unit-normalized embedding vectors and cosine ranking.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VectorError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("vector has a non-finite entry at {0}")]
    NonFinite(usize),
    #[error("zero vector cannot be normalized")]
    Zero,
    #[error("empty vector")]
    Empty,
}

/// Embedding with unit Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Validates and normalizes raw backend output.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self, VectorError> {
        if values.is_empty() {
            return Err(VectorError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(VectorError::NonFinite(i));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(VectorError::Zero);
        }
        for v in values.iter_mut() {
            *v /= norm;
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Dot product of two unit vectors, clamped to [-1, 1] against rounding.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, VectorError> {
    if a.dim() != b.dim() {
        return Err(VectorError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(dot(a.as_slice(), b.as_slice()).clamp(-1.0, 1.0))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean of the vectors, re-normalized. `None` for an empty input or a zero mean.
pub fn centroid<'a>(vectors: impl IntoIterator<Item = &'a EmbeddingVector>) -> Option<EmbeddingVector> {
    let mut acc: Vec<f64> = Vec::new();
    for v in vectors {
        if acc.is_empty() {
            acc = vec![0.0; v.dim()];
        }
        if acc.len() != v.dim() {
            return None;
        }
        for (a, x) in acc.iter_mut().zip(v.as_slice()) {
            *a += x;
        }
    }
    EmbeddingVector::normalized(acc).ok()
}

/// Similarity of each candidate to `query`, sorted descending with ties by key.
/// Candidates with a mismatched dimension are skipped.
pub fn rank_by_similarity<'a, K: Ord + Clone>(
    query: &EmbeddingVector,
    candidates: impl IntoIterator<Item = (K, &'a EmbeddingVector)>,
) -> Vec<(K, f64)> {
    let mut scored: Vec<(K, f64)> = candidates
        .into_iter()
        .filter_map(|(k, v)| cosine_similarity(query, v).ok().map(|s| (k, s)))
        .collect();
    scored.sort_by(|x, y| match y.1.total_cmp(&x.1) {
        Ordering::Equal => x.0.cmp(&y.0),
        o => o,
    });
    scored
}

/// First `k` entries of [`rank_by_similarity`].
pub fn top_k<'a, K: Ord + Clone>(
    query: &EmbeddingVector,
    candidates: impl IntoIterator<Item = (K, &'a EmbeddingVector)>,
    k: usize,
) -> Vec<(K, f64)> {
    let mut r = rank_by_similarity(query, candidates);
    r.truncate(k);
    r
}
