//! Embedding providers, cosine similarity and the persistent vector index.
//!
//! Every store in the pipeline (product scope chunks, taxonomy strings,
//! synthesized context, knowledge-graph records, catalogs, related pairs) is a
//! [`VectorIndex`] keyed by the provider that produced its vectors. Mixing
//! vectors of different providers or dimensions is rejected, never truncated.

mod embedder;
mod store;

pub use embedder::{cosine, embed, embed_many, EmbeddingProvider, EmbeddingVector, HashEmbedder};
pub use store::{IndexRecord, QueryHit, VectorIndex, INDEX_FORMAT_VERSION};

use thiserror::Error;

use crate::provider::ProviderError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("provider mismatch: index built with {expected}, queried with {found}")]
    ProviderMismatch { expected: String, found: String },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("embedding contains a non-finite value")]
    NonFinite,
    #[error("index is closed")]
    IndexClosed,
    #[error("duplicate record id {0}")]
    DuplicateRecord(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("corrupt index file: {0}")]
    CorruptIndexFile(String),
    #[error("unsupported index format version {found} (supported: {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("index i/o: {0}")]
    Io(String),
}
