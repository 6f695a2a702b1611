//! Review queue payloads and decision submission, shared by the CLI and
//! the HTTP API.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use greenreq_core::agent::{AgentTranscript, SubjectTranscript};
use greenreq_core::corpus::chunk_scope;
use greenreq_core::review::{ReviewAction, ReviewDecision, ReviewStage};
use greenreq_core::sr_elicitor::{CandidateSet, ContextResult};
use greenreq_core::sustainability_optimizer::OptimizationTask;

use crate::error::DecisionError;
use crate::pipeline::{names, Project, Result};
use crate::store::{PipelineState, ReviewItem, ReviewStatus};

/// Which reviews a listing returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewFilter {
    #[default]
    Pending,
    Decided,
    All,
}

impl ReviewFilter {
    pub fn admits(self, item: &ReviewItem) -> bool {
        match self {
            Self::Pending => item.status == ReviewStatus::Pending,
            Self::Decided => item.status == ReviewStatus::Decided,
            Self::All => true,
        }
    }
}

/// A decision as submitted by a reviewer; the workbench fills in the rest.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub action: Option<ReviewAction>,
    #[serde(default)]
    pub feedback: Option<String>,
    #[serde(default)]
    pub approved_refs: Option<Vec<String>>,
    #[serde(default)]
    pub reviewer: Option<String>,
    #[serde(default)]
    pub decision_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewSummary {
    pub project_id: String,
    #[serde(flatten)]
    pub item: ReviewItem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSummary {
    pub subject: String,
    pub provider_id: String,
    pub prompt_hash: String,
    pub status: String,
    pub step_count: usize,
    pub final_answer: String,
}

impl TranscriptSummary {
    pub fn new(subject: &str, t: &AgentTranscript) -> Self {
        Self {
            subject: subject.to_string(),
            provider_id: t.provider_id.clone(),
            prompt_hash: t.prompt_hash.clone(),
            status: serde_json::to_value(t.status)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            step_count: t.step_count,
            final_answer: t.final_answer.clone(),
        }
    }

    fn of(list: &[SubjectTranscript]) -> Vec<Self> {
        list.iter()
            .map(|s| Self::new(&s.subject, &s.transcript))
            .collect()
    }
}

pub fn list_reviews(
    project: &Project,
    st: &PipelineState,
    filter: ReviewFilter,
) -> Vec<ReviewSummary> {
    st.reviews
        .iter()
        .filter(|r| filter.admits(r))
        .map(|r| ReviewSummary {
            project_id: project.id().to_string(),
            item: r.clone(),
        })
        .collect()
}

/// Everything a reviewer needs to decide `review_id`.
pub fn review_detail(project: &Project, st: &PipelineState, review_id: &str) -> Result<Value> {
    let item = st
        .review(review_id)
        .ok_or_else(|| DecisionError::NotFound(format!("no review {review_id}")))?;
    let decision = match &item.decision_id {
        Some(id) => project
            .store
            .decisions()?
            .into_iter()
            .find(|d| &d.decision_id == id),
        None => None,
    };
    let summary = ReviewSummary {
        project_id: project.id().to_string(),
        item: item.clone(),
    };
    let payload = match item.stage {
        ReviewStage::SRApproval => sr_payload(project, st, item)?,
        ReviewStage::RevisionReview => revision_payload(project, st, item)?,
    };
    Ok(json!({
        "review": summary,
        "decision": decision,
        "payload": payload,
    }))
}

fn sr_payload(project: &Project, st: &PipelineState, item: &ReviewItem) -> Result<Value> {
    let set: CandidateSet = project.store.read_json(st, &item.artifact)?;
    let context: ContextResult = project.store.read_json(st, names::CONTEXT)?;
    let spec = project.spec(st)?;
    let chunks: BTreeMap<String, String> = chunk_scope(&spec)
        .into_iter()
        .map(|c| (c.chunk_id, c.text))
        .collect();
    let mut supporting = BTreeMap::new();
    for c in &set.candidates {
        for id in &c.supporting_context {
            supporting.entry(id.clone()).or_insert_with(|| {
                json!({
                    "chunk_id": id,
                    "text": chunks.get(id),
                    "context": context.items.iter().find(|i| &i.chunk_id == id),
                })
            });
        }
    }
    let mut by_dimension: BTreeMap<String, usize> = BTreeMap::new();
    for c in &set.candidates {
        *by_dimension
            .entry(c.dimension.as_str().to_string())
            .or_default() += 1;
    }
    Ok(json!({
        "kind": "sr_approval",
        "round": set.round,
        "feedback": set.feedback,
        "provider_id": set.provider_id,
        "candidates": set.candidates,
        "candidate_count_by_dimension": by_dimension,
        "supporting_context": supporting.into_values().collect::<Vec<_>>(),
        "synthesis": context.synthesis,
        "synthesis_check": context.synthesis_check,
        "warnings": set.warnings,
        "partial": set.partial || context.partial,
        "failures": set.failures.iter().map(|f| json!({"chunk_id": f.chunk_id, "error": f.error})).collect::<Vec<_>>(),
        "transcripts": TranscriptSummary::of(&set.transcripts),
        "context_transcripts": TranscriptSummary::of(&context.transcripts),
    }))
}

fn revision_payload(project: &Project, st: &PipelineState, item: &ReviewItem) -> Result<Value> {
    let tasks: Vec<OptimizationTask> = project.store.read_json(st, names::TASKS)?;
    let task = tasks
        .into_iter()
        .find(|t| t.task_id == item.subject)
        .ok_or_else(|| DecisionError::NotFound(format!("no task {}", item.subject)))?;
    let attempt = task
        .attempts
        .iter()
        .find(|a| a.round == item.round)
        .cloned();
    let revalidations: Vec<SubjectTranscript> = project
        .store
        .read_json(st, names::REVALIDATIONS)
        .unwrap_or_default();
    let suffix = format!("#revalidation-r{}", item.round);
    let transcripts: Vec<TranscriptSummary> = revalidations
        .iter()
        .filter(|s| s.subject.starts_with(&task.pair_ref) && s.subject.ends_with(&suffix))
        .map(|s| TranscriptSummary::new(&s.subject, &s.transcript))
        .collect();
    let revalidation = attempt.as_ref().and_then(|a| a.revalidation.clone());
    Ok(json!({
        "kind": "revision_review",
        "task_id": task.task_id,
        "pair_ref": task.pair_ref,
        "status": task.status,
        "original": task.requirement,
        "sustainability_requirement": task.sustainability_requirement,
        "constraint_srs": task.constraint_srs,
        "feedback": task.feedback,
        "round": item.round,
        "reproposal_limit": project.config.policy.reproposal_limit,
        "proposal": attempt.as_ref().map(|a| &a.proposal),
        "prompt_hash": attempt.as_ref().map(|a| &a.prompt_hash),
        "provider_id": attempt.as_ref().map(|a| &a.provider_id),
        "revalidation": revalidation,
        "similarity": revalidation.as_ref().map(|r| r.similarity),
        "transcripts": transcripts,
    }))
}

/// Build the decision a request describes, validated against the current
/// state without changing anything.
pub fn prepare_decision(
    project: &Project,
    st: &PipelineState,
    review_id: &str,
    req: DecisionRequest,
    timestamp: String,
) -> Result<ReviewDecision> {
    let item = st
        .review(review_id)
        .ok_or_else(|| DecisionError::NotFound(format!("no review {review_id}")))?;
    let action = req
        .action
        .ok_or_else(|| DecisionError::Invalid("action is required".into()))?;
    let decision_id = match req.decision_id {
        Some(id) if id.trim().is_empty() => {
            return Err(DecisionError::Invalid("decision_id is blank".into()).into())
        }
        Some(id) => id,
        None => next_decision_id(project, review_id)?,
    };
    let mut d = ReviewDecision::new(decision_id, item.stage, action);
    d.feedback = req.feedback;
    d.approved_refs = req.approved_refs;
    d.reviewer = req.reviewer.unwrap_or_default();
    d.timestamp = timestamp;
    if item.stage == ReviewStage::RevisionReview && d.approved_refs.is_some() {
        return Err(
            DecisionError::Invalid("approved_refs only applies to SR approval".into()).into(),
        );
    }
    d.validate()?;
    let d = project.normalize_decision(st, review_id, d)?;
    project.check_decision(st, review_id, &d)?;
    Ok(d)
}

/// Validate and append a decision to the log.
pub fn submit_decision(
    project: &Project,
    review_id: &str,
    req: DecisionRequest,
    timestamp: String,
) -> Result<ReviewDecision> {
    let st = project.state()?;
    let d = prepare_decision(project, &st, review_id, req, timestamp)?;
    project.store.append_decision(&d)?;
    Ok(d)
}

fn next_decision_id(project: &Project, review_id: &str) -> Result<String> {
    let existing = project.store.decisions()?;
    let mut n = existing
        .iter()
        .filter(|d| d.subject_refs.iter().any(|s| s == review_id))
        .count()
        + 1;
    loop {
        let id = format!("{review_id}.d{n}");
        if !existing.iter().any(|d| d.decision_id == id) {
            return Ok(id);
        }
        n += 1;
    }
}

pub fn now_timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
