use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::derive::{CandidateSet, CandidateStatus};
use super::ElicitError;
use crate::corpus::{Dimension, Requirement};
use crate::review::{ReviewAction, ReviewDecision, ReviewStage};

/// One member of SR_p with the taxonomy row it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElicitedSr {
    #[serde(flatten)]
    pub requirement: Requirement,
    pub taxonomy_ref: String,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElicitedSrSet {
    pub project_id: String,
    pub round: u32,
    pub members: Vec<ElicitedSr>,
    pub rejected_refs: Vec<String>,
    /// decision_id of the approving decision.
    pub approval_record: String,
}

impl ElicitedSrSet {
    pub fn requirements(&self) -> Vec<Requirement> {
        self.members.iter().map(|m| m.requirement.clone()).collect()
    }

    pub fn member(&self, id: &str) -> Option<&ElicitedSr> {
        self.members.iter().find(|m| m.requirement.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReviewOutcome {
    Approved(ElicitedSrSet),
    /// Re-run derivation for `next_round` with all feedback so far.
    Rerun {
        next_round: u32,
        feedback: Vec<String>,
    },
}

/// Apply an expert decision to a proposed candidate set.
pub fn review_round(
    set: &CandidateSet,
    decision: &ReviewDecision,
    max_rounds: Option<u32>,
) -> Result<(ReviewOutcome, CandidateSet), ElicitError> {
    decision.expect_stage(ReviewStage::SRApproval)?;
    let mut reviewed = set.clone();
    match decision.action {
        ReviewAction::Approve => {
            let keep = |id: &String| {
                decision
                    .approved_refs
                    .as_ref()
                    .is_none_or(|refs| refs.contains(id))
            };
            if let Some(refs) = &decision.approved_refs {
                if let Some(unknown) = refs
                    .iter()
                    .find(|r| !set.candidates.iter().any(|c| &c.record_id == *r))
                {
                    return Err(ElicitError::UnknownCandidate(unknown.clone()));
                }
            }
            let mut members = Vec::new();
            let mut rejected_refs = Vec::new();
            for c in reviewed.candidates.iter_mut() {
                if keep(&c.record_id) {
                    c.status = CandidateStatus::Approved;
                    members.push(ElicitedSr {
                        requirement: Requirement::sustainability(
                            format!("SR{}", members.len() + 1),
                            c.requirement.clone(),
                            c.dimension,
                            c.category.clone(),
                        ),
                        taxonomy_ref: c.record_id.clone(),
                        rationale: c.rationale.clone(),
                    });
                } else {
                    c.status = CandidateStatus::Rejected;
                    rejected_refs.push(c.record_id.clone());
                }
            }
            if members.is_empty() {
                return Err(ElicitError::ApproveWithZeroApprovedCandidates);
            }
            Ok((
                ReviewOutcome::Approved(ElicitedSrSet {
                    project_id: set.project_id.clone(),
                    round: set.round,
                    members,
                    rejected_refs,
                    approval_record: decision.decision_id.clone(),
                }),
                reviewed,
            ))
        }
        ReviewAction::RequestChanges => {
            let next_round = set.round + 1;
            if max_rounds.is_some_and(|m| next_round > m) {
                return Err(ElicitError::RoundLimit(set.round));
            }
            let mut feedback = set.feedback.clone();
            feedback.push(decision.feedback_text().expect("validated").to_string());
            Ok((
                ReviewOutcome::Rerun {
                    next_round,
                    feedback,
                },
                reviewed,
            ))
        }
        ReviewAction::Reject => Err(ElicitError::Review(
            crate::review::ReviewError::UnsupportedAction {
                stage: ReviewStage::SRApproval,
                action: ReviewAction::Reject,
            },
        )),
    }
}

/// SR count per dimension; every dimension is present and the counts sum
/// to the set size.
pub fn dimension_counts(set: &ElicitedSrSet) -> BTreeMap<Dimension, usize> {
    let mut counts: BTreeMap<Dimension, usize> =
        Dimension::ALL.into_iter().map(|d| (d, 0)).collect();
    for m in &set.members {
        if let Some(d) = m.requirement.dimension {
            *counts.entry(d).or_default() += 1;
        }
    }
    counts
}
