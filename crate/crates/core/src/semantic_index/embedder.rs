use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::IndexError;
use crate::provider::ProviderError;

/// Anything that turns text into fixed-length vectors.
///
/// Implementations must be deterministic for a fixed text and must always
/// return vectors of [`EmbeddingProvider::dimension`] length.
pub trait EmbeddingProvider: Send + Sync {
    fn provider_id(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError>;
}

impl<T: EmbeddingProvider + ?Sized> EmbeddingProvider for std::sync::Arc<T> {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError> {
        (**self).embed_batch(texts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, IndexError> {
        if values.is_empty() {
            return Err(IndexError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(IndexError::NonFinite);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn check_vector(raw: Vec<f64>, dimension: usize) -> Result<EmbeddingVector, IndexError> {
    if raw.len() != dimension {
        return Err(IndexError::DimensionMismatch {
            expected: dimension,
            found: raw.len(),
        });
    }
    EmbeddingVector::new(raw)
}

pub fn embed(text: &str, provider: &dyn EmbeddingProvider) -> Result<EmbeddingVector, IndexError> {
    if text.trim().is_empty() {
        return Err(IndexError::EmptyText);
    }
    let mut out = provider.embed_batch(&[text])?;
    if out.len() != 1 {
        return Err(
            ProviderError::BadResponse(format!("expected 1 vector, got {}", out.len())).into(),
        );
    }
    check_vector(out.remove(0), provider.dimension())
}

const BATCH: usize = 32;

/// Embed many texts, issuing up to `concurrency` provider calls at once.
/// Output order always matches input order.
pub fn embed_many(
    texts: &[&str],
    provider: &dyn EmbeddingProvider,
    concurrency: usize,
) -> Result<Vec<EmbeddingVector>, IndexError> {
    if texts.iter().any(|t| t.trim().is_empty()) {
        return Err(IndexError::EmptyText);
    }
    let batches: Vec<&[&str]> = texts.chunks(BATCH).collect();
    let run = |batch: &&[&str]| -> Result<Vec<EmbeddingVector>, IndexError> {
        let raw = provider.embed_batch(batch)?;
        if raw.len() != batch.len() {
            return Err(ProviderError::BadResponse(format!(
                "expected {} vectors, got {}",
                batch.len(),
                raw.len()
            ))
            .into());
        }
        raw.into_iter()
            .map(|v| check_vector(v, provider.dimension()))
            .collect()
    };
    let results: Vec<Result<Vec<EmbeddingVector>, IndexError>> =
        if concurrency <= 1 || batches.len() <= 1 {
            batches.iter().map(run).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(concurrency)
                .build()
                .map_err(|e| IndexError::Io(e.to_string()))?;
            pool.install(|| batches.par_iter().map(run).collect())
        };
    let mut out = Vec::with_capacity(texts.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// dot(a, b) / sqrt(|a|^2 |b|^2).
///
/// The squared norms are multiplied before the square root so identical
/// vectors score exactly 1.0; the result is symmetric bit-for-bit.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, IndexError> {
    if a.dimension() != b.dimension() {
        return Err(IndexError::DimensionMismatch {
            expected: a.dimension(),
            found: b.dimension(),
        });
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(IndexError::ZeroVector);
    }
    Ok((dot / (na * nb).sqrt()).clamp(-1.0, 1.0))
}

/// Deterministic token-hash bag-of-words embedder used by fixtures and tests.
///
/// Tokens are lower-cased ASCII alphanumeric runs; each token adds 1.0 to
/// bucket `fnv1a64(token) % 64`, and the result is L2-normalized.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashEmbedder;

impl HashEmbedder {
    pub const DIMENSION: usize = 64;
    pub const PROVIDER_ID: &'static str = "fixture-hash-64";

    pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
        text.split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| t.to_ascii_lowercase())
    }

    fn vector(text: &str) -> Result<Vec<f64>, ProviderError> {
        let mut v = vec![0.0; Self::DIMENSION];
        let mut any = false;
        for token in Self::tokens(text) {
            v[(fnv1a64(token.as_bytes()) % Self::DIMENSION as u64) as usize] += 1.0;
            any = true;
        }
        if !any {
            return Err(ProviderError::BadResponse(format!(
                "text has no alphanumeric tokens: {text:?}"
            )));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        Ok(v)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl EmbeddingProvider for HashEmbedder {
    fn provider_id(&self) -> &str {
        Self::PROVIDER_ID
    }

    fn dimension(&self) -> usize {
        Self::DIMENSION
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError> {
        texts.iter().map(|t| Self::vector(t)).collect()
    }
}
