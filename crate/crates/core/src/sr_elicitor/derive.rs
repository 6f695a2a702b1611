use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ElicitError;
use crate::agent::{
    react_prompt, run_react, vars, AgentError, AgentSettings, AgentTranscript, ChatProvider,
    SubjectTranscript, Tool, ToolOutput, ToolRegistry,
};
use crate::corpus::{Chunk, Dimension};
use crate::semantic_index::{EmbeddingProvider, IndexRecord, VectorIndex};

use super::context::ChunkFailure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateStatus {
    Proposed,
    Approved,
    Rejected,
}

/// A taxonomy row the agent nominated, with why and from which chunks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSr {
    /// Taxonomy record id (`tx-...`).
    pub record_id: String,
    pub requirement: String,
    pub dimension: Dimension,
    pub category: String,
    pub rationale: String,
    /// Chunk ids whose loops nominated this row.
    pub supporting_context: Vec<String>,
    pub status: CandidateStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub project_id: String,
    pub round: u32,
    /// All expert feedback so far, oldest first.
    pub feedback: Vec<String>,
    pub provider_id: String,
    pub candidates: Vec<CandidateSr>,
    pub transcripts: Vec<SubjectTranscript>,
    pub failures: Vec<ChunkFailure>,
    /// Final-answer lines that named no usable taxonomy row.
    pub warnings: Vec<String>,
    pub partial: bool,
}

/// Taxonomy row fields carried in a taxonomy index record's metadata.
pub fn taxonomy_fields(record: &IndexRecord) -> Option<(String, Dimension, String)> {
    let requirement = record.metadata.get("requirement")?.clone();
    let dimension = record.metadata.get("dimension")?.parse().ok()?;
    let category = record.metadata.get("category")?.clone();
    Some((requirement, dimension, category))
}

/// `taxonomy_retriever`: semantically related taxonomy rows.
pub fn taxonomy_retriever_tool(
    index: Arc<VectorIndex>,
    embedder: Arc<dyn EmbeddingProvider>,
    k: usize,
) -> Tool {
    Tool::new(
        "taxonomy_retriever",
        "Retrieves sustainability requirements from the taxonomy that are semantically related to the input text. Each result starts with its record id in square brackets.",
        move |input| {
            let hits = index
                .query(input, k, f64::NEG_INFINITY, embedder.as_ref())
                .map_err(|e| e.to_string())?;
            let lines: Vec<String> = hits
                .iter()
                .map(|h| match taxonomy_fields(&h.record) {
                    Some((req, dim, cat)) => {
                        format!("[{}] {} (Dimension: {}, Category: {}; score {:.3})", h.record_id, req, dim, cat, h.score)
                    }
                    None => format!("[{}] {} (score {:.3})", h.record_id, h.record.text, h.score),
                })
                .collect();
            let refs = hits.iter().map(|h| h.record_id.clone()).collect();
            Ok(ToolOutput::with_refs(
                if lines.is_empty() { "No taxonomy entries found.".into() } else { lines.join("\n") },
                refs,
            ))
        },
    )
}

/// `context_retriever`: the synthesized sustainability context.
pub fn context_retriever_tool(
    index: Arc<VectorIndex>,
    embedder: Arc<dyn EmbeddingProvider>,
    k: usize,
) -> Tool {
    Tool::new(
        "context_retriever",
        "Retrieves the sustainability goals, targets and indicators previously derived for the product that relate to the input text.",
        move |input| {
            if index.is_empty() {
                return Ok(ToolOutput::text("No sustainability context available."));
            }
            let hits = index
                .query(input, k, f64::NEG_INFINITY, embedder.as_ref())
                .map_err(|e| e.to_string())?;
            let text = hits
                .iter()
                .map(|h| format!("[{}]\n{}", h.record_id, h.record.text.trim()))
                .collect::<Vec<_>>()
                .join("\n\n");
            Ok(ToolOutput::with_refs(text, hits.iter().map(|h| h.record_id.clone()).collect()))
        },
    )
}

fn tx_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"tx-[0-9a-f]{10}").expect("tx regex"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nomination {
    pub record_id: String,
    pub rationale: String,
}

/// Read `SR: [tx-...] | rationale` lines from a final answer. Lines with an
/// id but no rationale are returned as warnings.
pub fn parse_nominations(answer: &str) -> (Vec<Nomination>, Vec<String>) {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for line in answer.lines() {
        let Some(m) = tx_pattern().find(line) else {
            continue;
        };
        let rest = &line[m.end()..];
        let rationale = match rest.find('|') {
            Some(p) => &rest[p + 1..],
            None => rest.trim_start_matches(|c: char| {
                c == ']' || c == ':' || c == '-' || c.is_whitespace()
            }),
        }
        .trim();
        if rationale.is_empty() {
            warnings.push(format!("no rationale for {}: {}", m.as_str(), line.trim()));
            continue;
        }
        out.push(Nomination {
            record_id: m.as_str().to_string(),
            rationale: rationale.to_string(),
        });
    }
    (out, warnings)
}

pub fn render_feedback(feedback: &[String]) -> String {
    if feedback.is_empty() {
        return "None.".into();
    }
    feedback
        .iter()
        .enumerate()
        .map(|(i, f)| format!("Round {} feedback: {}", i + 1, f.trim()))
        .collect::<Vec<_>>()
        .join("\n")
}

fn chunk_question(chunk: &Chunk) -> String {
    format!(
        "Which sustainability requirements from the taxonomy must be considered for product chunk {}?\n{}",
        chunk.chunk_id,
        chunk.text.trim()
    )
}

pub struct DeriveInputs<'a> {
    pub project_id: &'a str,
    pub chunks: &'a [Chunk],
    pub context_index: Arc<VectorIndex>,
    pub taxonomy_index: Arc<VectorIndex>,
    pub embedder: Arc<dyn EmbeddingProvider>,
    pub provider: &'a dyn ChatProvider,
    pub settings: &'a AgentSettings,
    pub round: u32,
    pub feedback: &'a [String],
}

/// One SR-listing loop per chunk; nominations are merged per taxonomy row.
pub fn derive_srs(inputs: DeriveInputs<'_>) -> Result<CandidateSet, ElicitError> {
    let DeriveInputs {
        project_id,
        chunks,
        context_index,
        taxonomy_index,
        embedder,
        provider,
        settings,
        round,
        feedback,
    } = inputs;
    if chunks.is_empty() {
        return Err(ElicitError::NoChunks);
    }
    let mut tools = ToolRegistry::new();
    tools.register(context_retriever_tool(
        context_index,
        embedder.clone(),
        settings.retrieval_k,
    ))?;
    tools.register(taxonomy_retriever_tool(
        taxonomy_index.clone(),
        embedder,
        settings.retrieval_k,
    ))?;
    let feedback_text = render_feedback(feedback);

    let runs: Vec<Result<AgentTranscript, AgentError>> = par_map(chunks, settings, |chunk| {
        let prompt = react_prompt(
            "sr_listing",
            &vars([
                ("input", chunk_question(chunk).as_str()),
                ("feedback", feedback_text.as_str()),
            ]),
            &tools,
        )?;
        run_react(provider, &prompt, &tools, &settings.react)
    });

    let mut merged: BTreeMap<String, usize> = BTreeMap::new();
    let mut candidates: Vec<CandidateSr> = Vec::new();
    let mut transcripts = Vec::new();
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    for (chunk, run) in chunks.iter().zip(runs) {
        let transcript = match run {
            Ok(t) => t,
            Err(e) => {
                if settings.strict {
                    return Err(ElicitError::ChunkFailed {
                        chunk_id: chunk.chunk_id.clone(),
                        source: e,
                    });
                }
                failures.push(ChunkFailure {
                    chunk_id: chunk.chunk_id.clone(),
                    error: e.to_string(),
                    transcript: e.transcript().cloned(),
                });
                continue;
            }
        };
        let (nominations, line_warnings) = parse_nominations(&transcript.final_answer);
        warnings.extend(
            line_warnings
                .into_iter()
                .map(|w| format!("{}: {w}", chunk.chunk_id)),
        );
        for n in nominations {
            let Some(record) = taxonomy_index.get(&n.record_id) else {
                return Err(ElicitError::UnknownTaxonomyRef {
                    chunk_id: chunk.chunk_id.clone(),
                    record_id: n.record_id,
                });
            };
            let Some((requirement, dimension, category)) = taxonomy_fields(record) else {
                return Err(ElicitError::UnknownTaxonomyRef {
                    chunk_id: chunk.chunk_id.clone(),
                    record_id: n.record_id,
                });
            };
            match merged.get(&n.record_id) {
                Some(&i) => {
                    let c = &mut candidates[i];
                    if !c.supporting_context.contains(&chunk.chunk_id) {
                        c.supporting_context.push(chunk.chunk_id.clone());
                    }
                }
                None => {
                    merged.insert(n.record_id.clone(), candidates.len());
                    candidates.push(CandidateSr {
                        record_id: n.record_id,
                        requirement,
                        dimension,
                        category,
                        rationale: n.rationale,
                        supporting_context: vec![chunk.chunk_id.clone()],
                        status: CandidateStatus::Proposed,
                    });
                }
            }
        }
        transcripts.push(SubjectTranscript {
            subject: chunk.chunk_id.clone(),
            transcript,
        });
    }
    if transcripts.is_empty() {
        return Err(ElicitError::AllChunksFailed(failures.len()));
    }
    Ok(CandidateSet {
        project_id: project_id.to_string(),
        round,
        feedback: feedback.to_vec(),
        provider_id: provider.provider_id().to_string(),
        candidates,
        transcripts,
        partial: !failures.is_empty(),
        failures,
        warnings,
    })
}

fn par_map<T: Send>(
    chunks: &[Chunk],
    settings: &AgentSettings,
    f: impl Fn(&Chunk) -> T + Sync + Send,
) -> Vec<T> {
    crate::util::par_map_ordered(chunks, settings.concurrency, f)
}
