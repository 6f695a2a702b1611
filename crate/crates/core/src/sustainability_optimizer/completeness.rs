use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::task::{OptimizationTask, TaskStatus};
use crate::corpus::Requirement;
use crate::relationship_integrator::{PairKind, Relation, RelationVerdict};
use crate::util::natural_cmp;

/// The post-optimization relation of one FR/NFR-to-SR pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalVerdict {
    pub pair_id: String,
    pub requirement_id: String,
    pub sr_id: String,
    pub relation: Relation,
    /// Set when the relation comes from the revalidation of an accepted
    /// revision.
    pub revised: bool,
}

/// Run-0 FR_SR/NFR_SR verdicts, with the revalidated relation replacing the
/// original for every accepted task.
pub fn final_verdicts(
    verdicts: &[RelationVerdict],
    tasks: &[OptimizationTask],
) -> Vec<FinalVerdict> {
    let accepted: BTreeMap<&str, Relation> = tasks
        .iter()
        .filter(|t| t.status == TaskStatus::Accepted)
        .filter_map(|t| {
            let r = t.current()?.revalidation.as_ref()?;
            Some((t.pair_ref.as_str(), r.verdict.relation))
        })
        .collect();
    let mut out: Vec<FinalVerdict> = verdicts
        .iter()
        .filter(|v| v.run_index == 0 && v.pair_kind != PairKind::SR_SR)
        .map(|v| {
            let revised = accepted.get(v.pair_id.as_str()).copied();
            FinalVerdict {
                pair_id: v.pair_id.clone(),
                requirement_id: v.left_id.clone(),
                sr_id: v.right_id.clone(),
                relation: revised.unwrap_or(v.relation),
                revised: revised.is_some(),
            }
        })
        .collect();
    out.sort_by(|a, b| natural_cmp(&a.pair_id, &b.pair_id));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SatisfiedPredicate {
    /// At least one FR/NFR pair with a final Positive verdict.
    #[default]
    AnyPositive,
    /// At least one FR/NFR pair in the final verdict list, any relation.
    AnyPair,
}

impl SatisfiedPredicate {
    pub fn definition(self) -> &'static str {
        match self {
            Self::AnyPositive => "an SR is satisfied iff at least one FR or NFR related to it has a final Positive verdict",
            Self::AnyPair => "an SR is satisfied iff at least one FR or NFR related to it appears in the final verdict list",
        }
    }

    fn admits(self, relation: Relation) -> bool {
        match self {
            Self::AnyPositive => relation == Relation::Positive,
            Self::AnyPair => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub satisfied_srs: Vec<String>,
    pub unsatisfied_srs: Vec<String>,
    pub predicate: SatisfiedPredicate,
    pub satisfied_definition: String,
    /// For each satisfied SR, the pairs that satisfy it.
    pub evidence: BTreeMap<String, Vec<String>>,
}

impl CompletenessReport {
    pub fn complete(&self) -> bool {
        self.unsatisfied_srs.is_empty()
    }
}

/// Partition the SR set into satisfied and unsatisfied SRs.
pub fn completeness_check(
    srs: &[Requirement],
    finals: &[FinalVerdict],
    predicate: SatisfiedPredicate,
) -> CompletenessReport {
    let mut evidence: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for f in finals.iter().filter(|f| predicate.admits(f.relation)) {
        evidence
            .entry(f.sr_id.clone())
            .or_default()
            .push(f.pair_id.clone());
    }
    let mut ids: Vec<&str> = srs
        .iter()
        .map(|s| s.id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    ids.sort_by(|a, b| natural_cmp(a, b));
    let (satisfied, unsatisfied): (Vec<&str>, Vec<&str>) =
        ids.into_iter().partition(|id| evidence.contains_key(*id));
    evidence.retain(|k, _| satisfied.contains(&k.as_str()));
    CompletenessReport {
        satisfied_srs: satisfied.into_iter().map(String::from).collect(),
        unsatisfied_srs: unsatisfied.into_iter().map(String::from).collect(),
        predicate,
        satisfied_definition: predicate.definition().to_string(),
        evidence,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntryStatus {
    Active,
    Superseded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalRequirement {
    #[serde(flatten)]
    pub requirement: Requirement,
    pub status: EntryStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supersedes: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superseded_by: Option<String>,
    /// Task that produced this revision.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_ref: Option<String>,
    /// Pairs whose Negative correlation the analyst accepted as a risk.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub accepted_risks: Vec<String>,
}

/// The full revised requirement list. Originals are kept and linked to their
/// revisions (`FR31` superseded by `FR31.r1`); several accepted revisions of
/// one requirement chain in task order.
pub fn final_requirements(
    requirements: &[Requirement],
    tasks: &[OptimizationTask],
) -> Vec<FinalRequirement> {
    let mut out = Vec::new();
    for r in requirements {
        let mine: Vec<&OptimizationTask> =
            tasks.iter().filter(|t| t.requirement.id == r.id).collect();
        let risks: Vec<String> = mine
            .iter()
            .filter(|t| t.accepted_risk)
            .map(|t| t.pair_ref.clone())
            .collect();
        let revisions: Vec<(&OptimizationTask, &str)> = mine
            .iter()
            .filter_map(|t| t.accepted_text().map(|x| (*t, x)))
            .collect();
        let mut entry = FinalRequirement {
            requirement: r.clone(),
            status: EntryStatus::Active,
            supersedes: None,
            superseded_by: None,
            task_ref: None,
            accepted_risks: risks,
        };
        for (i, (task, text)) in revisions.iter().enumerate() {
            let id = format!("{}.r{}", r.id, i + 1);
            entry.status = EntryStatus::Superseded;
            entry.superseded_by = Some(id.clone());
            let previous = entry.requirement.id.clone();
            let risks = std::mem::take(&mut entry.accepted_risks);
            out.push(entry);
            entry = FinalRequirement {
                requirement: Requirement {
                    id,
                    text: text.trim().to_string(),
                    ..r.clone()
                },
                status: EntryStatus::Active,
                supersedes: Some(previous),
                superseded_by: None,
                task_ref: Some(task.task_id.clone()),
                accepted_risks: risks,
            };
        }
        out.push(entry);
    }
    out
}

/// Human-readable record of accepted revisions and accepted risks.
pub fn changelog(tasks: &[OptimizationTask]) -> String {
    let mut s = String::from("# Requirement changes\n");
    let accepted: Vec<&OptimizationTask> = tasks
        .iter()
        .filter(|t| t.status == TaskStatus::Accepted)
        .collect();
    let rejected: Vec<&OptimizationTask> = tasks
        .iter()
        .filter(|t| t.status == TaskStatus::Rejected)
        .collect();
    let open: Vec<&OptimizationTask> = tasks
        .iter()
        .filter(|t| !matches!(t.status, TaskStatus::Accepted | TaskStatus::Rejected))
        .collect();
    if accepted.is_empty() && rejected.is_empty() && open.is_empty() {
        s.push_str("\nNo requirement conflicted with a sustainability requirement.\n");
        return s;
    }
    for t in &accepted {
        let attempt = t.current().expect("accepted task has an attempt");
        let _ = writeln!(
            s,
            "\n## {} (for {})\n",
            t.requirement.id, t.sustainability_requirement.id
        );
        let _ = writeln!(s, "- Original: {}", t.requirement.text.trim());
        let _ = writeln!(
            s,
            "- Revised: {}",
            attempt.proposal.recommended.revised_requirement.trim()
        );
        let _ = writeln!(
            s,
            "- Candidate: {}",
            attempt.proposal.recommended_candidate().label
        );
        let _ = writeln!(
            s,
            "- Justification: {}",
            attempt.proposal.recommended.justification.trim()
        );
        if let Some(r) = &attempt.revalidation {
            let _ = writeln!(s, "- Similarity to original: {:.2}", r.similarity);
            let _ = writeln!(s, "- Revalidated relation: {}", r.verdict.relation);
        }
        if let Some(d) = &attempt.decision {
            let _ = writeln!(s, "- Decision: {} ({})", d.action, d.decision_id);
        }
        let _ = writeln!(s, "- Rounds: {}", t.attempts.len());
    }
    if !rejected.is_empty() {
        s.push_str("\n## Accepted risks\n\n");
        for t in &rejected {
            let _ = writeln!(
                s,
                "- {} kept as written despite its negative correlation with {}",
                t.requirement.id, t.sustainability_requirement.id
            );
        }
    }
    if !open.is_empty() {
        s.push_str("\n## Awaiting decision\n\n");
        for t in &open {
            let _ = writeln!(s, "- {} ({:?})", t.task_id, t.status);
        }
    }
    s
}
