//! Stage 3: revise the FRs and NFRs that work against an SR, check the
//! revisions, and verify that every SR is still covered.

use thiserror::Error;

use crate::agent::AgentError;
use crate::relationship_integrator::RelateError;
use crate::review::ReviewError;
use crate::semantic_index::IndexError;

mod completeness;
mod proposal;
mod task;

pub use completeness::{
    changelog, completeness_check, final_requirements, final_verdicts, CompletenessReport,
    EntryStatus, FinalRequirement, FinalVerdict, SatisfiedPredicate,
};
pub use proposal::{
    parse_proposal, CandidateLabel, Level, Recommendation, RevisionCandidate, RevisionProposal,
};
pub use task::{
    analyst_review, find_negative_pairs, optimizer_prompt, propose_revision, revalidate,
    revised_requirement, Attempt, OptimizationTask, Revalidation, ReviewEffect, TaskStatus,
    DEFAULT_REPROPOSAL_LIMIT,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("no JSON object in optimizer output: {0}")]
    UnparseableProposal(String),
    #[error("proposal violates the schema: {0}")]
    SchemaViolation(String),
    #[error("verdict refers to unknown related pair {0}")]
    UnknownPair(String),
    #[error("task {task_id} is {status:?}; cannot {action}")]
    WrongState {
        task_id: String,
        status: TaskStatus,
        action: String,
    },
    #[error("decision {decision_id} is not about task {task_id}")]
    DecisionSubjectMismatch {
        task_id: String,
        decision_id: String,
    },
    #[error("task {task_id} reached its limit of {limit} proposal rounds; approve or reject it")]
    ReproposalLimit { task_id: String, limit: u32 },
    #[error("provider: {0}")]
    Provider(String),
    #[error(transparent)]
    Review(#[from] ReviewError),
    #[error(transparent)]
    Relate(#[from] RelateError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Index(#[from] IndexError),
}
