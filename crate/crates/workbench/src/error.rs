use thiserror::Error;

use greenreq_core::agent::AgentError;
use greenreq_core::corpus::CorpusError;
use greenreq_core::knowledge_graph::GraphError;
use greenreq_core::relationship_integrator::RelateError;
use greenreq_core::review::ReviewError;
use greenreq_core::semantic_index::IndexError;
use greenreq_core::sr_elicitor::ElicitError;
use greenreq_core::sustainability_optimizer::OptimizeError;

use crate::config::ConfigError;
use crate::store::StoreError;

/// Process exit codes, one per error class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const AWAITING_REVIEW: i32 = 3;
    pub const STAGE_ORDER: i32 = 4;
    pub const CONFIG: i32 = 5;
    pub const DATA: i32 = 6;
    pub const PROVIDER: i32 = 7;
    pub const DECISION: i32 = 8;
    pub const BUSY: i32 = 9;
}

/// Why a review decision was refused. Maps onto HTTP 404 / 409 / 422.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecisionError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage order violation: {0}")]
    StageOrder(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("invalid input: {0}")]
    Data(String),
    #[error("provider failure: {detail}{}", transcript_ref.as_ref().map(|r| format!(" (transcript: {r})")).unwrap_or_default())]
    Provider {
        detail: String,
        transcript_ref: Option<String>,
    },
    #[error("decision refused: {0}")]
    Decision(#[from] DecisionError),
    #[error("timed out waiting for review {0}")]
    ReviewTimeout(String),
}

impl WorkbenchError {
    pub fn provider(detail: impl ToString) -> Self {
        Self::Provider {
            detail: detail.to_string(),
            transcript_ref: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => exit::CONFIG,
            Self::StageOrder(_) => exit::STAGE_ORDER,
            Self::Store(StoreError::NotInitialized(_)) => exit::STAGE_ORDER,
            Self::Store(StoreError::Busy(_)) => exit::BUSY,
            Self::Store(StoreError::DuplicateDecision(_)) => exit::DECISION,
            Self::Store(StoreError::Io { .. }) => exit::FAILURE,
            Self::Store(_) | Self::Data(_) => exit::DATA,
            Self::Provider { .. } => exit::PROVIDER,
            Self::Decision(_) => exit::DECISION,
            Self::ReviewTimeout(_) => exit::AWAITING_REVIEW,
        }
    }
}

impl From<AgentError> for WorkbenchError {
    fn from(e: AgentError) -> Self {
        match e {
            AgentError::UnknownTemplate(_)
            | AgentError::UnboundPlaceholder { .. }
            | AgentError::MalformedTemplate { .. }
            | AgentError::DuplicateTool(_)
            | AgentError::InvalidTool(_)
            | AgentError::NoTools
            | AgentError::InvalidConfig(_) => Self::Data(e.to_string()),
            other => Self::provider(other),
        }
    }
}

impl From<IndexError> for WorkbenchError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Provider(p) => Self::provider(p),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<CorpusError> for WorkbenchError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Index(i) => i.into(),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<GraphError> for WorkbenchError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Provider(_) | GraphError::UnparseableModelOutput { .. } => {
                Self::provider(e)
            }
            GraphError::Prompt(a) => a.into(),
            GraphError::Index(i) => i.into(),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<ReviewError> for WorkbenchError {
    fn from(e: ReviewError) -> Self {
        Self::Decision(DecisionError::Invalid(e.to_string()))
    }
}

impl From<ElicitError> for WorkbenchError {
    fn from(e: ElicitError) -> Self {
        match e {
            ElicitError::ChunkFailed { .. }
            | ElicitError::AllChunksFailed(_)
            | ElicitError::SynthesisFailed(_)
            | ElicitError::UnknownTaxonomyRef { .. } => Self::provider(e),
            ElicitError::Agent(a) => a.into(),
            ElicitError::Index(i) => i.into(),
            ElicitError::Review(r) => r.into(),
            ElicitError::UnknownCandidate(_) | ElicitError::ApproveWithZeroApprovedCandidates => {
                Self::Decision(DecisionError::Invalid(e.to_string()))
            }
            ElicitError::RoundLimit(_) => Self::Decision(DecisionError::Conflict(e.to_string())),
            ElicitError::NoChunks => Self::Data(e.to_string()),
        }
    }
}

impl From<RelateError> for WorkbenchError {
    fn from(e: RelateError) -> Self {
        match e {
            RelateError::PairFailed {
                ref pair_id,
                run_index,
                ..
            } => Self::Provider {
                transcript_ref: Some(greenreq_core::relationship_integrator::transcript_subject(
                    pair_id, run_index,
                )),
                detail: e.to_string(),
            },
            RelateError::UnparseableVerdict { .. } => Self::provider(e),
            RelateError::Agent(a) => a.into(),
            RelateError::Index(i) => i.into(),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<OptimizeError> for WorkbenchError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::UnparseableProposal(_)
            | OptimizeError::SchemaViolation(_)
            | OptimizeError::Provider(_) => Self::provider(e),
            OptimizeError::WrongState { .. }
            | OptimizeError::DecisionSubjectMismatch { .. }
            | OptimizeError::ReproposalLimit { .. } => {
                Self::Decision(DecisionError::Conflict(e.to_string()))
            }
            OptimizeError::Review(r) => r.into(),
            OptimizeError::Relate(r) => r.into(),
            OptimizeError::Agent(a) => a.into(),
            OptimizeError::Index(i) => i.into(),
            OptimizeError::UnknownPair(_) => Self::Data(e.to_string()),
        }
    }
}
