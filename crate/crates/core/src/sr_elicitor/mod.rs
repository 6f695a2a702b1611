//! Stage 1: derive the product's sustainability requirements from the
//! taxonomy, grounded in knowledge-graph context, with expert approval.

use thiserror::Error;

use crate::agent::AgentError;
use crate::review::ReviewError;
use crate::semantic_index::IndexError;

mod approval;
mod context;
mod derive;

pub use approval::{dimension_counts, review_round, ElicitedSr, ElicitedSrSet, ReviewOutcome};
pub use context::{
    cited_entities, generate_context, ChunkFailure, ContextItem, ContextResult, SynthesisCheck,
    SYNTHESIS_RECORD,
};
pub use derive::{
    context_retriever_tool, derive_srs, parse_nominations, render_feedback, taxonomy_fields,
    taxonomy_retriever_tool, CandidateSet, CandidateSr, CandidateStatus, DeriveInputs, Nomination,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElicitError {
    #[error("no product chunks to process")]
    NoChunks,
    #[error("chunk {chunk_id} failed: {source}")]
    ChunkFailed {
        chunk_id: String,
        source: AgentError,
    },
    #[error("all {0} chunk loops failed")]
    AllChunksFailed(usize),
    #[error("synthesis failed: {0}")]
    SynthesisFailed(Box<AgentError>),
    #[error("chunk {chunk_id} nominated {record_id}, which is not in the taxonomy")]
    UnknownTaxonomyRef { chunk_id: String, record_id: String },
    #[error("approved ref {0} is not a candidate of this round")]
    UnknownCandidate(String),
    #[error("approval keeps no candidates; SR_p cannot be empty")]
    ApproveWithZeroApprovedCandidates,
    #[error("review round limit reached at round {0}")]
    RoundLimit(u32),
    #[error(transparent)]
    Review(#[from] ReviewError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Index(#[from] IndexError),
}
