use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::proposal::{parse_proposal, RevisionProposal};
use super::OptimizeError;
use crate::agent::{render_prompt, vars, ChatParams, ChatProvider, ChatRequest};
use crate::corpus::{Requirement, RequirementKind};
use crate::relationship_integrator::{
    PairKind, RelateError, Relation, RelationVerdict, RequirementPair,
};
use crate::review::{ReviewAction, ReviewDecision, ReviewStage};
use crate::semantic_index::{cosine, embed_many, EmbeddingProvider};
use crate::sr_elicitor::render_feedback;
use crate::util::{natural_cmp, sha256_hex};

pub const DEFAULT_REPROPOSAL_LIMIT: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskStatus {
    Pending,
    Proposed,
    Revalidated,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Revalidation {
    /// Cosine of the original and the recommended revision.
    pub similarity: f64,
    pub verdict: RelationVerdict,
    /// Positive or Neutral.
    pub success: bool,
    /// Neutral success: acceptable but still open to revision.
    pub revisable: bool,
}

/// One proposal round: the proposal, its revalidation and the analyst's
/// decision on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub round: u32,
    pub prompt_hash: String,
    pub provider_id: String,
    pub proposal: RevisionProposal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revalidation: Option<Revalidation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<ReviewDecision>,
    /// Set when the re-ask was needed to get a valid proposal.
    #[serde(default)]
    pub repaired: bool,
}

/// Revise one FR/NFR that correlates negatively with one SR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTask {
    /// Same as `pair_ref`.
    pub task_id: String,
    /// The Negative `<R_j, SR_k>` pair.
    pub pair_ref: String,
    pub requirement: Requirement,
    pub sustainability_requirement: Requirement,
    /// SRs in Negative correlation with SR_k that R_j is also related to.
    pub constraint_srs: Vec<Requirement>,
    pub status: TaskStatus,
    #[serde(default)]
    pub feedback: Vec<String>,
    #[serde(default)]
    pub attempts: Vec<Attempt>,
    /// Set when the analyst rejected the revision and kept the original.
    #[serde(default)]
    pub accepted_risk: bool,
}

impl OptimizationTask {
    pub fn current(&self) -> Option<&Attempt> {
        self.attempts.last()
    }

    pub fn proposal(&self) -> Option<&RevisionProposal> {
        self.current().map(|a| &a.proposal)
    }

    /// The accepted revision text, if any.
    pub fn accepted_text(&self) -> Option<&str> {
        (self.status == TaskStatus::Accepted)
            .then(|| {
                self.proposal()
                    .map(|p| p.recommended.revised_requirement.as_str())
            })
            .flatten()
    }

    fn expect(&self, allowed: &[TaskStatus], action: &str) -> Result<(), OptimizeError> {
        if allowed.contains(&self.status) {
            Ok(())
        } else {
            Err(OptimizeError::WrongState {
                task_id: self.task_id.clone(),
                status: self.status,
                action: action.to_string(),
            })
        }
    }
}

/// One task per Negative FR_SR/NFR_SR verdict of run 0.
///
/// `related` resolves pair ids to requirements and tells which SRs each
/// requirement is related to.
pub fn find_negative_pairs(
    verdicts: &[RelationVerdict],
    related: &[RequirementPair],
) -> Result<Vec<OptimizationTask>, OptimizeError> {
    let pairs: BTreeMap<&str, &RequirementPair> =
        related.iter().map(|p| (p.pair_id.as_str(), p)).collect();
    let canonical: Vec<&RelationVerdict> = verdicts.iter().filter(|v| v.run_index == 0).collect();
    for v in &canonical {
        if !pairs.contains_key(v.pair_id.as_str()) {
            return Err(OptimizeError::UnknownPair(v.pair_id.clone()));
        }
    }
    let mut sr_conflicts: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for v in canonical
        .iter()
        .filter(|v| v.pair_kind == PairKind::SR_SR && v.relation == Relation::Negative)
    {
        sr_conflicts
            .entry(&v.left_id)
            .or_default()
            .insert(&v.right_id);
        sr_conflicts
            .entry(&v.right_id)
            .or_default()
            .insert(&v.left_id);
    }
    let mut sr_of: BTreeMap<&str, &Requirement> = BTreeMap::new();
    let mut related_srs: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for p in related {
        sr_of.insert(&p.right.id, &p.right);
        if p.pair_kind == PairKind::SR_SR {
            sr_of.insert(&p.left.id, &p.left);
        } else {
            related_srs
                .entry(&p.left.id)
                .or_default()
                .insert(&p.right.id);
        }
    }

    let mut tasks = Vec::new();
    for v in canonical
        .iter()
        .filter(|v| v.pair_kind != PairKind::SR_SR && v.relation == Relation::Negative)
    {
        let pair = pairs[v.pair_id.as_str()];
        let sr_k = pair.right.id.as_str();
        let mut constraints: Vec<Requirement> = sr_conflicts
            .get(sr_k)
            .into_iter()
            .flatten()
            .filter(|m| {
                related_srs
                    .get(pair.left.id.as_str())
                    .is_some_and(|s| s.contains(*m))
            })
            .filter_map(|m| sr_of.get(m).map(|r| (*r).clone()))
            .collect();
        constraints.sort_by(|a, b| natural_cmp(&a.id, &b.id));
        tasks.push(OptimizationTask {
            task_id: pair.pair_id.clone(),
            pair_ref: pair.pair_id.clone(),
            requirement: pair.left.clone(),
            sustainability_requirement: pair.right.clone(),
            constraint_srs: constraints,
            status: TaskStatus::Pending,
            feedback: Vec::new(),
            attempts: Vec::new(),
            accepted_risk: false,
        });
    }
    tasks.sort_by(|a, b| natural_cmp(&a.task_id, &b.task_id));
    Ok(tasks)
}

/// The optimizer prompt for the task's next round.
pub fn optimizer_prompt(task: &OptimizationTask) -> Result<String, OptimizeError> {
    let constraints = if task.constraint_srs.is_empty() {
        "None.".to_string()
    } else {
        task.constraint_srs
            .iter()
            .map(|r| format!("- {}", r.labeled()))
            .collect::<Vec<_>>()
            .join("\n")
    };
    Ok(render_prompt(
        "optimizer",
        &vars([
            ("requirement_type", task.requirement.kind.as_str()),
            ("requirement", task.requirement.labeled().as_str()),
            (
                "sustainability_requirement",
                task.sustainability_requirement.labeled().as_str(),
            ),
            ("constraint_srs", constraints.as_str()),
            ("feedback", render_feedback(&task.feedback).as_str()),
        ]),
    )?)
}

/// Ask for three revisions and a recommendation. One re-ask on an
/// unusable answer; the task moves to Proposed.
pub fn propose_revision(
    task: &mut OptimizationTask,
    provider: &dyn ChatProvider,
    params: &ChatParams,
) -> Result<(), OptimizeError> {
    task.expect(&[TaskStatus::Pending], "propose")?;
    let prompt = optimizer_prompt(task)?;
    let ask = |p: &str| -> Result<String, OptimizeError> {
        provider
            .complete(&ChatRequest {
                prompt: p.to_string(),
                params: params.clone(),
            })
            .map_err(|e| OptimizeError::Provider(e.to_string()))
    };
    let first = ask(&prompt)?;
    let (proposal, repaired) = match check(task, parse_proposal(&first)) {
        Ok(p) => (p, false),
        Err(e) => {
            let repair = render_prompt(
                "json_repair",
                &vars([
                    ("prompt", prompt.as_str()),
                    ("error", e.to_string().as_str()),
                    ("response", first.as_str()),
                ]),
            )?;
            (check(task, parse_proposal(&ask(&repair)?))?, true)
        }
    };
    task.attempts.push(Attempt {
        round: task.attempts.len() as u32 + 1,
        prompt_hash: sha256_hex(&prompt),
        provider_id: provider.provider_id().to_string(),
        proposal,
        revalidation: None,
        decision: None,
        repaired,
    });
    task.status = TaskStatus::Proposed;
    Ok(())
}

fn check(
    task: &OptimizationTask,
    parsed: Result<RevisionProposal, OptimizeError>,
) -> Result<RevisionProposal, OptimizeError> {
    let p = parsed?;
    if p.requirement_type != task.requirement.kind {
        return Err(OptimizeError::SchemaViolation(format!(
            "requirement_type {} does not match {} ({})",
            p.requirement_type, task.requirement.id, task.requirement.kind
        )));
    }
    Ok(p)
}

/// The revised requirement with the original id.
pub fn revised_requirement(task: &OptimizationTask) -> Option<Requirement> {
    task.proposal().map(|p| Requirement {
        text: p.recommended.revised_requirement.trim().to_string(),
        ..task.requirement.clone()
    })
}

/// Similarity of original and recommended revision, then re-classification
/// of the revised pair through `classify`.
pub fn revalidate(
    task: &mut OptimizationTask,
    embedder: &dyn EmbeddingProvider,
    classify: impl Fn(&RequirementPair) -> Result<RelationVerdict, RelateError>,
) -> Result<(), OptimizeError> {
    task.expect(
        &[TaskStatus::Proposed, TaskStatus::Revalidated],
        "revalidate",
    )?;
    let revised = revised_requirement(task).expect("proposed task has a proposal");
    let vectors = embed_many(&[&task.requirement.text, &revised.text], embedder, 1)?;
    let similarity = cosine(&vectors[0], &vectors[1])?;
    let kind = match revised.kind {
        RequirementKind::FR => PairKind::FR_SR,
        _ => PairKind::NFR_SR,
    };
    let pair = RequirementPair {
        similarity: Some(similarity),
        ..RequirementPair::new(revised, task.sustainability_requirement.clone(), kind)
    };
    let verdict = classify(&pair)?;
    let attempt = task
        .attempts
        .last_mut()
        .expect("proposed task has an attempt");
    attempt.revalidation = Some(Revalidation {
        similarity,
        success: verdict.relation != Relation::Negative,
        revisable: verdict.relation == Relation::Neutral,
        verdict,
    });
    task.status = TaskStatus::Revalidated;
    Ok(())
}

/// What an analyst decision did to the task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReviewEffect {
    Accepted,
    /// Back to Pending for another proposal with the feedback appended.
    Reproposal,
    /// Original kept; the pair is an accepted risk.
    Rejected,
}

/// Apply an analyst decision to a revalidated task. `limit` bounds the
/// number of proposal rounds; past it only Approve or Reject are accepted.
pub fn analyst_review(
    task: &mut OptimizationTask,
    decision: &ReviewDecision,
    limit: u32,
) -> Result<ReviewEffect, OptimizeError> {
    decision.expect_stage(ReviewStage::RevisionReview)?;
    task.expect(&[TaskStatus::Revalidated], "review")?;
    if !decision.subject_refs.is_empty() && !decision.subject_refs.contains(&task.task_id) {
        return Err(OptimizeError::DecisionSubjectMismatch {
            task_id: task.task_id.clone(),
            decision_id: decision.decision_id.clone(),
        });
    }
    let effect = match decision.action {
        ReviewAction::Approve => {
            task.status = TaskStatus::Accepted;
            ReviewEffect::Accepted
        }
        ReviewAction::Reject => {
            task.status = TaskStatus::Rejected;
            task.accepted_risk = true;
            ReviewEffect::Rejected
        }
        ReviewAction::RequestChanges => {
            if task.attempts.len() as u32 >= limit {
                return Err(OptimizeError::ReproposalLimit {
                    task_id: task.task_id.clone(),
                    limit,
                });
            }
            task.feedback
                .push(decision.feedback_text().expect("validated").to_string());
            task.status = TaskStatus::Pending;
            ReviewEffect::Reproposal
        }
    };
    task.attempts
        .last_mut()
        .expect("revalidated task has an attempt")
        .decision = Some(decision.clone());
    Ok(effect)
}
