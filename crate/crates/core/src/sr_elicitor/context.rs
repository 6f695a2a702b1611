use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ElicitError;
use crate::agent::{
    react_prompt, run_react, synthesize, vars, AgentError, AgentSettings, AgentTranscript,
    BufferMemory, ChatProvider, SubjectTranscript, ToolRegistry,
};
use crate::corpus::{Chunk, ChunkSource};
use crate::knowledge_graph::{kg_retriever_tool, EntityKind, GraphDoc, KnowledgeGraph};
use crate::semantic_index::{EmbeddingProvider, IndexError, VectorIndex};
use crate::util::{contains_word, par_map_ordered};

/// Goals, targets, indicators and relationships the agent found relevant to
/// one product chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextItem {
    pub chunk_id: String,
    pub goals: Vec<String>,
    pub targets: Vec<String>,
    pub indicators: Vec<String>,
    /// Relationship record ids whose endpoints are both cited.
    pub relationships: Vec<String>,
    pub rationale_text: String,
}

impl ContextItem {
    pub fn entity_refs(&self) -> impl Iterator<Item = &String> {
        self.goals
            .iter()
            .chain(&self.targets)
            .chain(&self.indicators)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkFailure {
    pub chunk_id: String,
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<AgentTranscript>,
}

/// Whether the synthesis cites only entities found by the per-chunk loops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisCheck {
    pub cited: Vec<String>,
    pub stray: Vec<String>,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextResult {
    pub provider_id: String,
    pub items: Vec<ContextItem>,
    pub memory: BufferMemory,
    pub synthesis: String,
    pub synthesis_check: SynthesisCheck,
    pub transcripts: Vec<SubjectTranscript>,
    pub failures: Vec<ChunkFailure>,
    /// Set when some chunks failed under the lenient policy.
    pub partial: bool,
}

pub const SYNTHESIS_RECORD: &str = "context:synthesis";

impl ContextResult {
    /// The context store: one record per chunk answer plus the synthesis.
    pub fn context_index(
        &self,
        embedder: &dyn EmbeddingProvider,
    ) -> Result<VectorIndex, IndexError> {
        let mut chunks: Vec<Chunk> = self
            .items
            .iter()
            .filter(|i| !i.rationale_text.trim().is_empty())
            .map(|i| {
                let refs: Vec<&str> = i.entity_refs().map(String::as_str).collect();
                Chunk::new(
                    format!("context:{}", i.chunk_id),
                    ChunkSource::Context,
                    i.rationale_text.clone(),
                )
                .with_meta("chunk_id", i.chunk_id.clone())
                .with_meta("refs", refs.join(","))
            })
            .collect();
        if !self.synthesis.trim().is_empty() {
            chunks.push(
                Chunk::new(
                    SYNTHESIS_RECORD,
                    ChunkSource::Context,
                    self.synthesis.clone(),
                )
                .with_meta("refs", self.synthesis_check.cited.join(",")),
            );
        }
        let mut index = VectorIndex::for_provider(embedder);
        if !chunks.is_empty() {
            index.add_chunks(&chunks, embedder, 1)?;
        }
        Ok(index)
    }
}

/// Entity ids cited in `text`, by id token or full name, in graph order.
pub fn cited_entities(text: &str, doc: &GraphDoc) -> Vec<String> {
    let lower = text.to_lowercase();
    doc.entities
        .iter()
        .filter(|e| {
            contains_word(text, &e.id)
                || (e.name.trim().len() >= 8 && lower.contains(&e.name.trim().to_lowercase()))
        })
        .map(|e| e.id.clone())
        .collect()
}

fn context_item(chunk_id: &str, transcript: &AgentTranscript, doc: &GraphDoc) -> ContextItem {
    let mut refs = cited_entities(&transcript.final_answer, doc);
    if refs.is_empty() {
        let observed: BTreeSet<String> = transcript.observed_refs().into_iter().collect();
        refs = doc
            .entities
            .iter()
            .filter(|e| observed.contains(&e.id))
            .map(|e| e.id.clone())
            .collect();
    }
    let of_kind = |k: EntityKind| -> Vec<String> {
        refs.iter()
            .filter(|id| doc.entity(id).is_some_and(|e| e.kind == k))
            .cloned()
            .collect()
    };
    let cited: BTreeSet<&String> = refs.iter().collect();
    ContextItem {
        chunk_id: chunk_id.to_string(),
        goals: of_kind(EntityKind::Goal),
        targets: of_kind(EntityKind::Target),
        indicators: of_kind(EntityKind::Indicator),
        relationships: doc
            .relationships
            .iter()
            .filter(|r| cited.contains(&r.from) && cited.contains(&r.to))
            .map(|r| r.record_id())
            .collect(),
        rationale_text: transcript.final_answer.clone(),
    }
}

fn chunk_question(chunk: &Chunk) -> String {
    format!(
        "Which sustainability goals, targets and indicators are relevant to product chunk {}?\n{}",
        chunk.chunk_id,
        chunk.text.trim()
    )
}

/// One knowledge-graph loop per chunk, memory entries in chunk order, then a
/// synthesis loop over the memory.
pub fn generate_context(
    chunks: &[Chunk],
    graph: Arc<KnowledgeGraph>,
    embedder: Arc<dyn EmbeddingProvider>,
    provider: &dyn ChatProvider,
    settings: &AgentSettings,
) -> Result<ContextResult, ElicitError> {
    if chunks.is_empty() {
        return Err(ElicitError::NoChunks);
    }
    let mut tools = ToolRegistry::new();
    tools.register(kg_retriever_tool(
        graph.clone(),
        embedder,
        settings.retrieval_k,
    ))?;

    let runs: Vec<Result<AgentTranscript, AgentError>> =
        par_map_ordered(chunks, settings.concurrency, |chunk| {
            let prompt = react_prompt(
                "kg_iterative",
                &vars([
                    ("chunk_id", chunk.chunk_id.as_str()),
                    ("input", &chunk_question(chunk)),
                ]),
                &tools,
            )?;
            run_react(provider, &prompt, &tools, &settings.react)
        });

    let doc = graph.doc();
    let mut memory = BufferMemory::new();
    let mut items = Vec::new();
    let mut transcripts = Vec::new();
    let mut failures = Vec::new();
    for (chunk, run) in chunks.iter().zip(runs) {
        match run {
            Ok(t) => {
                let item = context_item(&chunk.chunk_id, &t, doc);
                memory.append(chunk.chunk_id.clone(), memory_summary(&item, doc))?;
                items.push(item);
                transcripts.push(SubjectTranscript {
                    subject: chunk.chunk_id.clone(),
                    transcript: t,
                });
            }
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
            }
        }
    }
    if memory.is_empty() {
        return Err(ElicitError::AllChunksFailed(failures.len()));
    }

    let synthesis = synthesize(
        provider,
        &memory,
        "kg_synthesis",
        &vars([(
            "input",
            "Provide the final synthesis of the sustainability goals, targets, indicators and relationships relevant to the product.",
        )]),
        &tools,
        &settings.react,
    )
    .map_err(|e| ElicitError::SynthesisFailed(Box::new(e)))?;

    let known: BTreeSet<&String> = items.iter().flat_map(|i| i.entity_refs()).collect();
    let cited = cited_entities(&synthesis.final_answer, doc);
    let stray: Vec<String> = cited
        .iter()
        .filter(|id| !known.contains(id))
        .cloned()
        .collect();
    let synthesis_check = SynthesisCheck {
        consistent: stray.is_empty(),
        cited,
        stray,
    };
    let synthesis_text = synthesis.final_answer.clone();
    transcripts.push(SubjectTranscript {
        subject: "synthesis".into(),
        transcript: synthesis,
    });
    Ok(ContextResult {
        provider_id: provider.provider_id().to_string(),
        items,
        memory,
        synthesis: synthesis_text,
        synthesis_check,
        transcripts,
        partial: !failures.is_empty(),
        failures,
    })
}

fn memory_summary(item: &ContextItem, doc: &GraphDoc) -> String {
    let names: Vec<String> = item
        .entity_refs()
        .filter_map(|id| doc.entity(id))
        .map(|e| format!("{} ({} {})", e.name, e.kind, e.id))
        .collect();
    format!(
        "Related entities: {}\n{}",
        if names.is_empty() {
            "none".to_string()
        } else {
            names.join("; ")
        },
        item.rationale_text.trim()
    )
}
