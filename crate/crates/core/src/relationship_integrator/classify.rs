use std::fmt;

use serde::{Deserialize, Serialize};

use super::catalog::{CatalogId, Catalogs};
use super::pairs::{PairKind, RequirementPair};
use super::RelateError;
use crate::agent::{
    react_prompt, render_prompt, run_react, vars, AgentSettings, AgentStep, AgentTranscript,
    ChatProvider, ChatRequest, StepKind, SubjectTranscript,
};
use crate::corpus::Requirement;
use crate::util::{contains_word, natural_cmp, par_map_ordered};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    Positive,
    Negative,
    Neutral,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Self::Positive, Self::Negative, Self::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Positive => "Positive",
            Self::Negative => "Negative",
            Self::Neutral => "Neutral",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Specialist {
    SustainabilityAgent,
    MixedAgent,
}

impl Specialist {
    pub fn template_id(self) -> &'static str {
        match self {
            Self::SustainabilityAgent => "sustainability_agent",
            Self::MixedAgent => "mixed_agent",
        }
    }

    pub fn catalogs(self) -> &'static [CatalogId] {
        match self {
            Self::SustainabilityAgent => &[CatalogId::SRCorrelation],
            Self::MixedAgent => &CatalogId::ALL,
        }
    }
}

/// Coordinator routing: SR-only pairs to the sustainability agent, mixed
/// pairs to the mixed agent.
pub fn route(kind: PairKind) -> Specialist {
    match kind {
        PairKind::SR_SR => Specialist::SustainabilityAgent,
        PairKind::FR_SR | PairKind::NFR_SR => Specialist::MixedAgent,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationVerdict {
    pub pair_id: String,
    pub pair_kind: PairKind,
    pub left_id: String,
    pub right_id: String,
    pub relation: Relation,
    pub reason: String,
    /// Catalog records the agent received and cited; empty means the
    /// verdict rests on the model's own reasoning.
    pub catalog_refs: Vec<String>,
    /// Subject of the transcript that produced this verdict.
    pub transcript_ref: String,
    pub run_index: u32,
    pub specialist: Specialist,
    /// Set when the answer needed the re-ask to be parseable.
    #[serde(default)]
    pub repaired: bool,
}

impl RelationVerdict {
    pub fn catalog_referred(&self) -> bool {
        !self.catalog_refs.is_empty()
    }
}

/// The four fields of a final answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerdictBlock {
    pub requirement_1: Option<String>,
    pub requirement_2: Option<String>,
    pub relation: Relation,
    pub reason: String,
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Req1,
    Req2,
    Relation,
    Reason,
}

fn field_label(line: &str) -> Option<(Field, &str)> {
    let stripped =
        line.trim_start_matches(|c: char| c == '*' || c == '-' || c == '#' || c.is_whitespace());
    let colon = stripped.find(':')?;
    let label = stripped[..colon]
        .trim_matches(|c: char| c == '*' || c.is_whitespace())
        .to_ascii_lowercase();
    let field = match label.as_str() {
        "requirement 1" | "requirement1" => Field::Req1,
        "requirement 2" | "requirement2" => Field::Req2,
        "relation type" | "relation" | "correlation" | "relationship type" => Field::Relation,
        "reason" | "reasoning" => Field::Reason,
        _ => return None,
    };
    Some((field, stripped[colon + 1..].trim_start_matches('*').trim()))
}

/// Parse the `Requirement 1 / Requirement 2 / Relation Type / Reason`
/// block. The relation is the first word of its field and must be one of
/// the three classes; the reason may span several lines.
pub fn parse_verdict(answer: &str) -> Result<VerdictBlock, String> {
    let mut req1 = None;
    let mut req2 = None;
    let mut relation_text: Option<String> = None;
    let mut reason: Option<String> = None;
    let mut current: Option<Field> = None;
    for line in answer.lines() {
        if let Some((field, value)) = field_label(line) {
            current = Some(field);
            let value = value.to_string();
            match field {
                Field::Req1 => req1 = Some(value),
                Field::Req2 => req2 = Some(value),
                Field::Relation => relation_text = Some(value),
                Field::Reason => reason = Some(value),
            }
        } else if current == Some(Field::Reason) {
            if let Some(r) = reason.as_mut() {
                if !line.trim().is_empty() {
                    if !r.is_empty() {
                        r.push('\n');
                    }
                    r.push_str(line.trim());
                }
            }
        }
    }
    let relation_text = relation_text.ok_or("missing Relation Type field")?;
    let first = relation_text
        .split(|c: char| !c.is_ascii_alphabetic())
        .find(|w| !w.is_empty())
        .unwrap_or("");
    let relation = Relation::ALL
        .into_iter()
        .find(|r| r.as_str().eq_ignore_ascii_case(first))
        .ok_or_else(|| {
            format!("Relation Type {relation_text:?} is not one of Positive, Negative, Neutral")
        })?;
    let reason = reason.map(|r| r.trim().to_string()).unwrap_or_default();
    if reason.is_empty() {
        return Err("missing or empty Reason field".into());
    }
    Ok(VerdictBlock {
        requirement_1: req1.filter(|s| !s.is_empty()),
        requirement_2: req2.filter(|s| !s.is_empty()),
        relation,
        reason,
    })
}

fn describe(r: &Requirement) -> String {
    match (&r.dimension, &r.category) {
        (Some(d), Some(c)) => format!("{} (Dimension: {d}, Category: {c}): {}", r.id, r.text),
        _ => format!("{} ({}): {}", r.id, r.kind, r.text),
    }
}

pub fn pair_question(pair: &RequirementPair) -> String {
    format!(
        "Identify the relation between the following requirements.\nRequirement 1: {}\nRequirement 2: {}",
        describe(&pair.left),
        describe(&pair.right)
    )
}

/// Subject used for a (pair, run) transcript.
pub fn transcript_subject(pair_id: &str, run_index: u32) -> String {
    format!("{pair_id}#{run_index}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classified {
    pub verdict: RelationVerdict,
    pub transcript: AgentTranscript,
}

/// Route one pair to its specialist, run the loop and parse the verdict,
/// re-asking once when the answer is not a usable four-field block.
pub fn classify(
    pair: &RequirementPair,
    catalogs: &Catalogs,
    provider: &dyn ChatProvider,
    settings: &AgentSettings,
    run_index: u32,
) -> Result<Classified, RelateError> {
    if !pair.is_consistent() {
        return Err(RelateError::Routing {
            pair_id: pair.pair_id.clone(),
            detail: format!(
                "pair kind {} does not match members {} and {}",
                pair.pair_kind, pair.left.kind, pair.right.kind
            ),
        });
    }
    let specialist = route(pair.pair_kind);
    let tools = catalogs.registry(specialist.catalogs(), settings.retrieval_k)?;
    let question = pair_question(pair);
    let prompt = react_prompt(
        specialist.template_id(),
        &vars([("input", question.as_str())]),
        &tools,
    )?;
    let mut transcript = run_react(provider, &prompt, &tools, &settings.react)?;

    let mut repaired = false;
    let block = match parse_verdict(&transcript.final_answer) {
        Ok(b) => b,
        Err(error) => {
            let repair = render_prompt(
                "verdict_repair",
                &vars([
                    ("question", question.as_str()),
                    ("error", error.as_str()),
                    ("response", transcript.final_answer.as_str()),
                ]),
            )?;
            let reply = provider
                .complete(&ChatRequest {
                    prompt: repair,
                    params: settings.react.params.clone(),
                })
                .map_err(crate::agent::AgentError::from)?;
            transcript.steps.push(AgentStep {
                kind: StepKind::FinalAnswer,
                text: reply.trim().to_string(),
                tool_name: None,
                tool_input: None,
                refs: Vec::new(),
            });
            transcript.step_count += 1;
            let reparsed =
                parse_verdict(&reply).map_err(|detail| RelateError::UnparseableVerdict {
                    pair_id: pair.pair_id.clone(),
                    detail,
                })?;
            transcript.final_answer = reply.trim().to_string();
            repaired = true;
            reparsed
        }
    };

    let reasoning = transcript.model_text();
    let catalog_refs: Vec<String> = transcript
        .observed_refs()
        .into_iter()
        .filter(|r| catalogs.contains(r) && contains_word(&reasoning, r))
        .collect();
    Ok(Classified {
        verdict: RelationVerdict {
            pair_id: pair.pair_id.clone(),
            pair_kind: pair.pair_kind,
            left_id: pair.left.id.clone(),
            right_id: pair.right.id.clone(),
            relation: block.relation,
            reason: block.reason,
            catalog_refs,
            transcript_ref: transcript_subject(&pair.pair_id, run_index),
            run_index,
            specialist,
            repaired,
        },
        transcript,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFailure {
    pub pair_id: String,
    pub run_index: u32,
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<AgentTranscript>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRun {
    pub provider_id: String,
    pub runs: u32,
    /// Sorted by (pair id, run index).
    pub verdicts: Vec<RelationVerdict>,
    pub transcripts: Vec<SubjectTranscript>,
    pub failures: Vec<PairFailure>,
}

impl ClassificationRun {
    /// Verdicts of run 0, the ones later stages act on.
    pub fn canonical(&self) -> Vec<&RelationVerdict> {
        self.verdicts.iter().filter(|v| v.run_index == 0).collect()
    }

    pub fn run(&self, run_index: u32) -> Vec<&RelationVerdict> {
        self.verdicts
            .iter()
            .filter(|v| v.run_index == run_index)
            .collect()
    }
}

/// Every related pair classified `runs` times. Under the strict policy the
/// first failure aborts; otherwise failures are recorded per (pair, run).
pub fn classify_all(
    pairs: &[RequirementPair],
    catalogs: &Catalogs,
    provider: &dyn ChatProvider,
    settings: &AgentSettings,
    runs: u32,
) -> Result<ClassificationRun, RelateError> {
    if runs == 0 {
        return Err(RelateError::InvalidRuns);
    }
    if let Some(bad) = pairs.iter().find(|p| !p.is_consistent()) {
        return Err(RelateError::Routing {
            pair_id: bad.pair_id.clone(),
            detail: format!("pair kind {} does not match its members", bad.pair_kind),
        });
    }
    let mut jobs: Vec<(&RequirementPair, u32)> = Vec::with_capacity(pairs.len() * runs as usize);
    for run in 0..runs {
        for p in pairs {
            jobs.push((p, run));
        }
    }
    jobs.sort_by(|a, b| natural_cmp(&a.0.pair_id, &b.0.pair_id).then(a.1.cmp(&b.1)));
    let results = par_map_ordered(&jobs, settings.concurrency, |(pair, run)| {
        classify(pair, catalogs, provider, settings, *run)
    });

    let mut verdicts = Vec::new();
    let mut transcripts = Vec::new();
    let mut failures = Vec::new();
    for ((pair, run), result) in jobs.iter().zip(results) {
        match result {
            Ok(c) => {
                transcripts.push(SubjectTranscript {
                    subject: c.verdict.transcript_ref.clone(),
                    transcript: c.transcript,
                });
                verdicts.push(c.verdict);
            }
            Err(e) => {
                if settings.strict {
                    return Err(RelateError::PairFailed {
                        pair_id: pair.pair_id.clone(),
                        run_index: *run,
                        detail: e.to_string(),
                    });
                }
                let transcript = match &e {
                    RelateError::Agent(a) => a.transcript().cloned(),
                    _ => None,
                };
                failures.push(PairFailure {
                    pair_id: pair.pair_id.clone(),
                    run_index: *run,
                    error: e.to_string(),
                    transcript,
                });
            }
        }
    }
    Ok(ClassificationRun {
        provider_id: provider.provider_id().to_string(),
        runs,
        verdicts,
        transcripts,
        failures,
    })
}
