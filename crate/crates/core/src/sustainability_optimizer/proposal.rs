use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::OptimizeError;
use crate::corpus::RequirementKind;
use crate::util::{extract_json, normalize_ws};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CandidateLabel {
    Minimal,
    Moderate,
    Alternative,
}

impl CandidateLabel {
    pub const ALL: [CandidateLabel; 3] = [Self::Minimal, Self::Moderate, Self::Alternative];
}

impl fmt::Display for CandidateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionCandidate {
    pub label: CandidateLabel,
    #[serde(rename = "revised_requirement", alias = "revised_text")]
    pub revised_text: String,
    pub preservation_score: i64,
    /// `Low`, `Medium`, `High` or a percentage such as `40%`.
    #[serde(
        rename = "estimated_SR_impact_reduction",
        alias = "estimated_sr_impact_reduction"
    )]
    pub estimated_sr_impact_reduction: String,
    pub confidence: Level,
    pub acceptance_criteria: Vec<String>,
    pub residual_risks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub revised_requirement: String,
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionProposal {
    pub original_requirement: String,
    pub requirement_type: RequirementKind,
    pub sustainability_requirement: String,
    pub candidates: Vec<RevisionCandidate>,
    pub recommended: Recommendation,
}

impl RevisionProposal {
    /// The candidate the recommendation points at.
    pub fn recommended_candidate(&self) -> &RevisionCandidate {
        let target = normalize_ws(&self.recommended.revised_requirement);
        self.candidates
            .iter()
            .find(|c| normalize_ws(&c.revised_text) == target)
            .expect("validated proposals recommend one of their candidates")
    }

    pub fn candidate(&self, label: CandidateLabel) -> Option<&RevisionCandidate> {
        self.candidates.iter().find(|c| c.label == label)
    }

    /// Enforce every schema rule beyond field presence and types.
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let violation = |m: String| Err(OptimizeError::SchemaViolation(m));
        if !matches!(
            self.requirement_type,
            RequirementKind::FR | RequirementKind::NFR
        ) {
            return violation(format!(
                "requirement_type must be FR or NFR, got {}",
                self.requirement_type
            ));
        }
        if self.candidates.len() != 3 {
            return violation(format!(
                "expected exactly 3 candidates, got {}",
                self.candidates.len()
            ));
        }
        let labels: BTreeSet<CandidateLabel> = self.candidates.iter().map(|c| c.label).collect();
        if labels.len() != 3 {
            return violation(
                "candidate labels must be exactly Minimal, Moderate and Alternative".into(),
            );
        }
        for c in &self.candidates {
            if !(0..=100).contains(&c.preservation_score) {
                return violation(format!(
                    "{} preservation_score {} outside 0-100",
                    c.label, c.preservation_score
                ));
            }
            if c.revised_text.trim().is_empty() {
                return violation(format!(
                    "{} candidate has an empty revised_requirement",
                    c.label
                ));
            }
            if !impact_ok(&c.estimated_sr_impact_reduction) {
                return violation(format!(
                    "{} estimated_SR_impact_reduction {:?} is not Low, Medium, High or a percentage",
                    c.label, c.estimated_sr_impact_reduction
                ));
            }
        }
        if self.recommended.justification.trim().is_empty() {
            return violation("recommended.justification is empty".into());
        }
        let target = normalize_ws(&self.recommended.revised_requirement);
        if !self
            .candidates
            .iter()
            .any(|c| normalize_ws(&c.revised_text) == target)
        {
            return violation("recommended.revised_requirement matches no candidate".into());
        }
        Ok(())
    }
}

fn impact_ok(value: &str) -> bool {
    let v = value.trim();
    if ["Low", "Medium", "High"]
        .iter()
        .any(|l| l.eq_ignore_ascii_case(v))
    {
        return true;
    }
    v.strip_suffix('%')
        .and_then(|n| n.trim().parse::<f64>().ok())
        .is_some_and(|n| (0.0..=100.0).contains(&n))
}

#[derive(Deserialize)]
struct RawProposal {
    original_requirement: String,
    requirement_type: String,
    sustainability_requirement: String,
    candidates: Vec<RevisionCandidate>,
    recommended: Recommendation,
}

/// Parse model output into a validated proposal. Output with no JSON at all
/// is unparseable; JSON of the wrong shape is a schema violation.
pub fn parse_proposal(text: &str) -> Result<RevisionProposal, OptimizeError> {
    let value = extract_json(text).map_err(OptimizeError::UnparseableProposal)?;
    let raw: RawProposal =
        serde_json::from_value(value).map_err(|e| OptimizeError::SchemaViolation(e.to_string()))?;
    let requirement_type = match raw.requirement_type.trim() {
        "FR" => RequirementKind::FR,
        "NFR" => RequirementKind::NFR,
        other => {
            return Err(OptimizeError::SchemaViolation(format!(
                "requirement_type must be FR or NFR, got {other:?}"
            )))
        }
    };
    let proposal = RevisionProposal {
        original_requirement: raw.original_requirement,
        requirement_type,
        sustainability_requirement: raw.sustainability_requirement,
        candidates: raw.candidates,
        recommended: raw.recommended,
    };
    proposal.validate()?;
    Ok(proposal)
}
