//! Project report computed from persisted artifacts only.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use greenreq_core::relationship_integrator::{
    trust_audit, ConsistencyReport, Relation, TrustReport,
};
use greenreq_core::sr_elicitor::{dimension_counts, CandidateSet};
use greenreq_core::sustainability_optimizer::TaskStatus;

use crate::error::WorkbenchError;
use crate::pipeline::{names, CoherenceArtifact, KgArtifact, Project, Result};
use crate::store::{PipelineState, Stage};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub project_id: String,
    pub stage: Stage,
    pub provenance: Provenance,
    pub inputs: InputSummary,
    pub knowledge_graph: Option<GraphSummary>,
    pub elicitation: Option<ElicitationSummary>,
    pub pairs: Option<PairSummary>,
    pub verdicts: Option<VerdictSummary>,
    pub optimization: Option<OptimizationSummary>,
    pub completeness: Option<CompletenessSummary>,
    pub audits: AuditSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub embedding_provider: String,
    /// Chat provider per stage that used one.
    pub chat_providers: BTreeMap<String, String>,
    pub templates: BTreeMap<String, String>,
    /// Content hash of every artifact.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub scope_sections: usize,
    pub functional_requirements: usize,
    pub nonfunctional_requirements: usize,
    pub taxonomy_rows: usize,
    pub coherence: CoherenceArtifact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub prompt_hash: String,
    pub extracted_entities: usize,
    pub extracted_relationships: usize,
    pub edits: usize,
    pub entities: usize,
    pub relationships: usize,
    pub errors: usize,
    pub warnings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: u32,
    pub candidates: usize,
    pub feedback: Vec<String>,
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElicitationSummary {
    pub rounds: Vec<RoundSummary>,
    pub approved: Option<ApprovedSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApprovedSummary {
    pub round: u32,
    pub sr_count: usize,
    pub rejected: usize,
    pub by_dimension: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub embedding_provider: String,
    pub threshold: f64,
    pub frs: usize,
    pub nfrs: usize,
    pub srs: usize,
    pub possible: usize,
    pub related: usize,
    pub by_kind: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub provider_id: String,
    pub runs: u32,
    /// Pairs with a verdict in run 0.
    pub classified: usize,
    pub positive: usize,
    pub negative: usize,
    pub neutral: usize,
    pub failures: usize,
    pub by_kind: BTreeMap<String, BTreeMap<String, usize>>,
    pub trust: TrustReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task_id: String,
    pub requirement_id: String,
    pub sr_id: String,
    pub status: TaskStatus,
    pub attempts: usize,
    pub similarity: Option<f64>,
    pub revalidated_relation: Option<Relation>,
    pub accepted_risk: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationSummary {
    pub tasks: Vec<TaskSummary>,
    pub by_status: BTreeMap<String, usize>,
    /// Mean similarity of accepted revisions to their originals.
    pub mean_accepted_similarity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessSummary {
    pub complete: bool,
    pub predicate: String,
    pub satisfied: Vec<String>,
    pub unsatisfied: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AuditSummary {
    pub consistency: Option<ConsistencyReport>,
    pub trust: Option<TrustReport>,
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

pub fn build_report(project: &Project, st: &PipelineState) -> Result<Report> {
    if st.step("ingest").is_none() {
        return Err(WorkbenchError::StageOrder(
            "report needs `ingest` to have run first".into(),
        ));
    }
    let store = &project.store;
    let spec = project.spec(st)?;
    let taxonomy: Vec<serde_json::Value> = store.read_json(st, names::TAXONOMY)?;
    let coherence: CoherenceArtifact = store.read_json(st, names::COHERENCE)?;
    let templates: BTreeMap<String, String> =
        store.read_json(st, names::TEMPLATES).unwrap_or_default();
    let mut chat_providers = BTreeMap::new();

    let knowledge_graph = if st.step("kg").is_some() {
        let kg: KgArtifact = store.read_json(st, names::KG_EXTRACTION)?;
        let doc: greenreq_core::knowledge_graph::GraphDoc = store.read_json(st, names::GRAPH)?;
        chat_providers.insert("kg".to_string(), kg.extraction.provider_id.clone());
        Some(GraphSummary {
            prompt_hash: kg.prompt_hash,
            extracted_entities: kg.extraction.doc.entities.len(),
            extracted_relationships: kg.extraction.doc.relationships.len(),
            edits: kg.edits.len(),
            entities: doc.entities.len(),
            relationships: doc.relationships.len(),
            errors: kg.final_report.errors.len(),
            warnings: kg.final_report.warnings.len(),
        })
    } else {
        None
    };

    let mut rounds = Vec::new();
    for s in st.steps.iter().filter(|s| s.name.starts_with("elicit.r")) {
        let set: CandidateSet = store.read_json(st, &s.outputs[0])?;
        chat_providers.insert("elicit".to_string(), set.provider_id.clone());
        rounds.push(RoundSummary {
            round: set.round,
            candidates: set.candidates.len(),
            feedback: set.feedback,
            partial: set.partial,
        });
    }
    let approved = if st.step("elicit.approval").is_some() {
        let set = project.sr_set(st)?;
        Some(ApprovedSummary {
            round: set.round,
            sr_count: set.members.len(),
            rejected: set.rejected_refs.len(),
            by_dimension: dimension_counts(&set)
                .into_iter()
                .map(|(d, n)| (d.as_str().to_string(), n))
                .collect(),
        })
    } else {
        None
    };
    let elicitation = (!rounds.is_empty()).then_some(ElicitationSummary { rounds, approved });

    let pairs = if st.step("relate").is_some() {
        let related = project.related(st)?;
        let mut by_kind = BTreeMap::new();
        for p in &related.pairs {
            *by_kind.entry(format!("{:?}", p.pair_kind)).or_insert(0) += 1;
        }
        Some(PairSummary {
            embedding_provider: related.embedding_provider,
            threshold: related.threshold,
            frs: related.counts.frs,
            nfrs: related.counts.nfrs,
            srs: related.counts.srs,
            possible: related.counts.possible,
            related: related.counts.related,
            by_kind,
        })
    } else {
        None
    };

    let verdicts = if st.step("classify").is_some() {
        let run = project.verdicts(st)?;
        chat_providers.insert("classify".to_string(), run.provider_id.clone());
        let first: Vec<_> = run
            .verdicts
            .iter()
            .filter(|v| v.run_index == 0)
            .cloned()
            .collect();
        let count = |r: Relation| first.iter().filter(|v| v.relation == r).count();
        let mut by_kind: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        for v in &first {
            *by_kind
                .entry(format!("{:?}", v.pair_kind))
                .or_default()
                .entry(v.relation.to_string())
                .or_insert(0) += 1;
        }
        Some(VerdictSummary {
            provider_id: run.provider_id.clone(),
            runs: run.runs,
            classified: first.len(),
            positive: count(Relation::Positive),
            negative: count(Relation::Negative),
            neutral: count(Relation::Neutral),
            failures: run.failures.len(),
            by_kind,
            trust: trust_audit(&first),
        })
    } else {
        None
    };

    let optimization = if st.step("optimize.tasks").is_some() {
        let tasks = project.tasks(st)?;
        let mut by_status = BTreeMap::new();
        let mut summaries = Vec::new();
        for t in &tasks {
            *by_status.entry(format!("{:?}", t.status)).or_insert(0) += 1;
            let reval = t.current().and_then(|a| a.revalidation.as_ref());
            if let Some(a) = t.current() {
                chat_providers.insert("optimize".to_string(), a.provider_id.clone());
            }
            summaries.push(TaskSummary {
                task_id: t.task_id.clone(),
                requirement_id: t.requirement.id.clone(),
                sr_id: t.sustainability_requirement.id.clone(),
                status: t.status,
                attempts: t.attempts.len(),
                similarity: reval.map(|r| round4(r.similarity)),
                revalidated_relation: reval.map(|r| r.verdict.relation),
                accepted_risk: t.accepted_risk,
            });
        }
        let accepted: Vec<f64> = tasks
            .iter()
            .filter(|t| t.status == TaskStatus::Accepted && !t.accepted_risk)
            .filter_map(|t| {
                t.current()
                    .and_then(|a| a.revalidation.as_ref())
                    .map(|r| r.similarity)
            })
            .collect();
        Some(OptimizationSummary {
            tasks: summaries,
            by_status,
            mean_accepted_similarity: (!accepted.is_empty())
                .then(|| round4(accepted.iter().sum::<f64>() / accepted.len() as f64)),
        })
    } else {
        None
    };

    let completeness = if st.step("check").is_some() {
        let c = project.completeness(st)?;
        Some(CompletenessSummary {
            complete: c.complete,
            predicate: c.report.satisfied_definition.clone(),
            satisfied: c.report.satisfied_srs.clone(),
            unsatisfied: c.report.unsatisfied_srs.clone(),
        })
    } else {
        None
    };

    let audits = AuditSummary {
        consistency: st
            .artifacts
            .contains_key(names::AUDIT_CONSISTENCY)
            .then(|| store.read_json(st, names::AUDIT_CONSISTENCY))
            .transpose()?,
        trust: st
            .artifacts
            .contains_key(names::AUDIT_TRUST)
            .then(|| store.read_json(st, names::AUDIT_TRUST))
            .transpose()?,
    };

    let mut artifacts = st.artifacts.clone();
    artifacts.remove(names::REPORT_JSON);
    artifacts.remove(names::REPORT_MD);

    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION,
        project_id: project.id().to_string(),
        stage: st.stage,
        provenance: Provenance {
            embedding_provider: coherence.embedding_provider.clone(),
            chat_providers,
            templates,
            artifacts,
        },
        inputs: InputSummary {
            scope_sections: spec.scope_sections.len(),
            functional_requirements: spec.functional_reqs.len(),
            nonfunctional_requirements: spec.nonfunctional_reqs.len(),
            taxonomy_rows: taxonomy.len(),
            coherence,
        },
        knowledge_graph,
        elicitation,
        pairs,
        verdicts,
        optimization,
        completeness,
        audits,
    })
}

fn pct(n: usize, total: usize) -> String {
    if total == 0 {
        "n/a".into()
    } else {
        format!("{:.0}%", 100.0 * n as f64 / total as f64)
    }
}

impl Report {
    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let w = &mut md;
        let _ = writeln!(w, "# Report: {}\n", self.project_id);
        let _ = writeln!(w, "Stage: {:?}\n", self.stage);

        let i = &self.inputs;
        let _ = writeln!(w, "## Inputs\n");
        let _ = writeln!(w, "| Item | Count |\n|---|---|");
        let _ = writeln!(w, "| Scope sections | {} |", i.scope_sections);
        let _ = writeln!(
            w,
            "| Functional requirements | {} |",
            i.functional_requirements
        );
        let _ = writeln!(
            w,
            "| Non-functional requirements | {} |",
            i.nonfunctional_requirements
        );
        let _ = writeln!(w, "| Taxonomy rows | {} |", i.taxonomy_rows);
        match &i.coherence.report {
            Some(r) => {
                let min = r
                    .pairwise_scores
                    .iter()
                    .map(|p| p.score)
                    .fold(f64::INFINITY, f64::min);
                let _ = writeln!(
                    w,
                    "\nScope coherence: {} (threshold {}, lowest pair {:.4}){}",
                    if r.passed { "passed" } else { "failed" },
                    r.threshold,
                    min,
                    if i.coherence.overridden {
                        ", overridden"
                    } else {
                        ""
                    }
                );
            }
            None => {
                let _ = writeln!(w, "\nScope coherence: not applicable (single section)");
            }
        }

        if let Some(g) = &self.knowledge_graph {
            let _ = writeln!(w, "\n## Knowledge graph\n");
            let _ = writeln!(w, "| | Entities | Relationships |\n|---|---|---|");
            let _ = writeln!(
                w,
                "| Extracted | {} | {} |",
                g.extracted_entities, g.extracted_relationships
            );
            let _ = writeln!(w, "| Final | {} | {} |", g.entities, g.relationships);
            let _ = writeln!(
                w,
                "\nEdits applied: {}. Validation: {} errors, {} warnings.",
                g.edits, g.errors, g.warnings
            );
        }

        if let Some(e) = &self.elicitation {
            let _ = writeln!(w, "\n## Sustainability requirements\n");
            let _ = writeln!(w, "| Round | Candidates | Feedback items |\n|---|---|---|");
            for r in &e.rounds {
                let _ = writeln!(
                    w,
                    "| {} | {} | {} |",
                    r.round,
                    r.candidates,
                    r.feedback.len()
                );
            }
            if let Some(a) = &e.approved {
                let _ = writeln!(
                    w,
                    "\nApproved in round {}: {} requirements ({} rejected).\n",
                    a.round, a.sr_count, a.rejected
                );
                let _ = writeln!(w, "| Dimension | Requirements |\n|---|---|");
                for (d, n) in &a.by_dimension {
                    let _ = writeln!(w, "| {d} | {n} |");
                }
            }
        }

        if let Some(p) = &self.pairs {
            let _ = writeln!(w, "\n## Related pairs\n");
            let _ = writeln!(
                w,
                "| FRs | NFRs | SRs | Possible pairs | Related (>= {}) |",
                p.threshold
            );
            let _ = writeln!(w, "|---|---|---|---|---|");
            let _ = writeln!(
                w,
                "| {} | {} | {} | {} | {} |",
                p.frs, p.nfrs, p.srs, p.possible, p.related
            );
            if !p.by_kind.is_empty() {
                let _ = writeln!(w, "\n| Pair kind | Related |\n|---|---|");
                for (k, n) in &p.by_kind {
                    let _ = writeln!(w, "| {k} | {n} |");
                }
            }
        }

        if let Some(v) = &self.verdicts {
            let _ = writeln!(w, "\n## Relations\n");
            let _ = writeln!(
                w,
                "| Positive | Negative | Neutral | Classified |\n|---|---|---|---|"
            );
            let _ = writeln!(
                w,
                "| {} | {} | {} | {} |",
                v.positive, v.negative, v.neutral, v.classified
            );
            let _ = writeln!(w, "\nRuns: {}. Failed pairs: {}.", v.runs, v.failures);
            let _ = writeln!(w, "Reasoning basis: {}", v.trust.total);
        }

        if let Some(o) = &self.optimization {
            let _ = writeln!(w, "\n## Revisions\n");
            if o.tasks.is_empty() {
                let _ = writeln!(w, "No negative pairs.");
            } else {
                let _ = writeln!(w, "| Task | Status | Attempts | Similarity | Revalidated |\n|---|---|---|---|---|");
                for t in &o.tasks {
                    let _ = writeln!(
                        w,
                        "| {} | {:?}{} | {} | {} | {} |",
                        t.task_id,
                        t.status,
                        if t.accepted_risk {
                            " (risk accepted)"
                        } else {
                            ""
                        },
                        t.attempts,
                        t.similarity
                            .map(|s| format!("{s:.4}"))
                            .unwrap_or_else(|| "-".into()),
                        t.revalidated_relation
                            .map(|r| r.to_string())
                            .unwrap_or_else(|| "-".into())
                    );
                }
                if let Some(m) = o.mean_accepted_similarity {
                    let _ = writeln!(w, "\nMean similarity of accepted revisions: {m:.4}");
                }
            }
        }

        if let Some(c) = &self.completeness {
            let total = c.satisfied.len() + c.unsatisfied.len();
            let _ = writeln!(w, "\n## Completeness\n");
            let _ = writeln!(
                w,
                "{} of {} sustainability requirements satisfied ({}). {}",
                c.satisfied.len(),
                total,
                pct(c.satisfied.len(), total),
                if c.complete {
                    "Complete."
                } else {
                    "Incomplete."
                }
            );
            let _ = writeln!(w, "\nSatisfied means: {}", c.predicate);
            if !c.unsatisfied.is_empty() {
                let _ = writeln!(w, "\nUnsatisfied: {}", c.unsatisfied.join(", "));
            }
        }

        if self.audits.consistency.is_some() || self.audits.trust.is_some() {
            let _ = writeln!(w, "\n## Audits\n");
            if let Some(c) = &self.audits.consistency {
                let _ = writeln!(w, "- Consistency: {c}");
            }
            if let Some(t) = &self.audits.trust {
                let _ = writeln!(w, "- Reasoning basis: {}", t.total);
            }
        }

        let _ = writeln!(w, "\n## Provenance\n");
        let _ = writeln!(
            w,
            "- Embedding provider: {}",
            self.provenance.embedding_provider
        );
        for (stage, p) in &self.provenance.chat_providers {
            let _ = writeln!(w, "- Chat provider ({stage}): {p}");
        }
        md
    }
}

/// Build the report and persist it as `report.json` and `report.md`.
pub fn write_report(project: &Project) -> Result<Report> {
    let mut st = project.state()?;
    let report = build_report(project, &st)?;
    project
        .store
        .write_json(&mut st, names::REPORT_JSON, &report)?;
    project
        .store
        .write_bytes(&mut st, names::REPORT_MD, report.to_markdown().as_bytes())?;
    project.store.save_state(&st)?;
    Ok(report)
}
