//! Stage 2: pair requirements with SRs, keep the semantically related pairs,
//! and classify each related pair as Positive, Negative or Neutral with
//! catalog-backed specialist agents.

use thiserror::Error;

use crate::agent::AgentError;
use crate::semantic_index::IndexError;

mod audit;
mod catalog;
mod classify;
mod pairs;

pub use audit::{
    compare_verdicts, consistency_audit, trust_audit, ComparisonReport, ConsistencyReport,
    Disagreement, TrustCounts, TrustReport, VerdictDifference,
};
pub use catalog::{Catalog, CatalogId, CatalogRecord, Catalogs};
pub use classify::{
    classify, classify_all, pair_question, parse_verdict, route, transcript_subject,
    ClassificationRun, Classified, PairFailure, Relation, RelationVerdict, Specialist,
    VerdictBlock,
};
pub use pairs::{
    calibrate_scores, calibrate_threshold, expected_pair_count, filter_related, filter_scored,
    generate_pairs, pair_id, parse_labeled_pairs, related_pair_index, score_pairs,
    sweep_thresholds, LabeledPair, PairKind, RequirementPair, SweepPoint, ThresholdCalibration,
    DEFAULT_RELATED_THRESHOLD,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelateError {
    #[error("no sustainability requirements to pair with")]
    EmptySRSet,
    #[error("invalid requirement: {0}")]
    InvalidRequirement(String),
    #[error("requirement id {0} appears more than once")]
    DuplicateRequirement(String),
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("calibration needs both related and unrelated examples")]
    DegenerateLabels,
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("{0} catalog is empty or missing")]
    EmptyCatalog(CatalogId),
    #[error("cannot route pair {pair_id}: {detail}")]
    Routing { pair_id: String, detail: String },
    #[error("pair {pair_id}: unparseable verdict after re-ask: {detail}")]
    UnparseableVerdict { pair_id: String, detail: String },
    #[error("pair {pair_id} run {run_index} failed: {detail}")]
    PairFailed {
        pair_id: String,
        run_index: u32,
        detail: String,
    },
    #[error("runs must be at least 1")]
    InvalidRuns,
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Index(#[from] IndexError),
}
