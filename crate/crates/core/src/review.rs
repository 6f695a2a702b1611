//! Human review decisions shared by the elicitation and revision stages.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReviewStage {
    SRApproval,
    RevisionReview,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReviewAction {
    Approve,
    Reject,
    RequestChanges,
}

impl fmt::Display for ReviewAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReviewError {
    #[error("RequestChanges needs non-empty feedback")]
    MissingFeedback,
    #[error("{action} is not a valid decision for {stage:?}")]
    UnsupportedAction {
        stage: ReviewStage,
        action: ReviewAction,
    },
    #[error("decision is for {found:?}, expected {expected:?}")]
    WrongStage {
        expected: ReviewStage,
        found: ReviewStage,
    },
}

/// One reviewer decision. Decisions are append-only records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub decision_id: String,
    pub stage: ReviewStage,
    /// What the decision is about (review id, candidate set, task id).
    #[serde(default)]
    pub subject_refs: Vec<String>,
    pub action: ReviewAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
    /// For SR approval: the candidate record ids kept. `None` keeps all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approved_refs: Option<Vec<String>>,
    #[serde(default)]
    pub reviewer: String,
    #[serde(default)]
    pub timestamp: String,
}

impl ReviewDecision {
    pub fn new(decision_id: impl Into<String>, stage: ReviewStage, action: ReviewAction) -> Self {
        Self {
            decision_id: decision_id.into(),
            stage,
            subject_refs: Vec::new(),
            action,
            feedback: None,
            approved_refs: None,
            reviewer: String::new(),
            timestamp: String::new(),
        }
    }

    pub fn with_feedback(mut self, feedback: impl Into<String>) -> Self {
        self.feedback = Some(feedback.into());
        self
    }

    pub fn with_approved(mut self, refs: Vec<String>) -> Self {
        self.approved_refs = Some(refs);
        self
    }

    pub fn with_subjects(mut self, refs: Vec<String>) -> Self {
        self.subject_refs = refs;
        self
    }

    /// Feedback text if present and not blank.
    pub fn feedback_text(&self) -> Option<&str> {
        self.feedback
            .as_deref()
            .map(str::trim)
            .filter(|f| !f.is_empty())
    }

    pub fn validate(&self) -> Result<(), ReviewError> {
        if self.action == ReviewAction::RequestChanges && self.feedback_text().is_none() {
            return Err(ReviewError::MissingFeedback);
        }
        Ok(())
    }

    pub fn expect_stage(&self, stage: ReviewStage) -> Result<(), ReviewError> {
        if self.stage != stage {
            return Err(ReviewError::WrongStage {
                expected: stage,
                found: self.stage,
            });
        }
        self.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_changes_needs_feedback() {
        let d = ReviewDecision::new("d1", ReviewStage::SRApproval, ReviewAction::RequestChanges);
        assert_eq!(d.validate(), Err(ReviewError::MissingFeedback));
        assert_eq!(
            d.clone().with_feedback("  ").validate(),
            Err(ReviewError::MissingFeedback)
        );
        assert!(d.with_feedback("add water").validate().is_ok());
    }

    #[test]
    fn json_shape() {
        let d = ReviewDecision::new("d1", ReviewStage::RevisionReview, ReviewAction::Approve);
        let v = serde_json::to_value(&d).unwrap();
        assert_eq!(v["stage"], "RevisionReview");
        assert_eq!(v["action"], "Approve");
        assert!(v.get("feedback").is_none());
    }
}
