use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::model::{GraphDoc, KgEntity, KgRelation};
use super::validate::validate;
use super::GraphError;
use crate::agent::{Tool, ToolOutput};
use crate::corpus::{Chunk, ChunkSource};
use crate::semantic_index::{EmbeddingProvider, VectorIndex};

/// A validated graph together with the embeddings of its entities and
/// relationships. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    doc: GraphDoc,
    index: VectorIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEntity {
    pub entity: KgEntity,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgraph {
    pub entities: Vec<ScoredEntity>,
    pub relations: Vec<KgRelation>,
}

impl Subgraph {
    pub fn entity_ids(&self) -> Vec<String> {
        self.entities.iter().map(|e| e.entity.id.clone()).collect()
    }

    /// Observation text for the agent: one line per entity, then the
    /// relationships among them.
    pub fn render(&self) -> String {
        if self.entities.is_empty() {
            return "No matching goals, targets or indicators.".into();
        }
        let mut lines: Vec<String> = self
            .entities
            .iter()
            .map(|s| {
                let e = &s.entity;
                let mut line = format!("[{}] {}: {}", e.id, e.kind, e.name);
                if let Some(d) = e.description.as_deref().filter(|d| !d.trim().is_empty()) {
                    line.push_str(&format!(". {}", d.trim()));
                }
                if let Some(u) = &e.unit_of_measure {
                    line.push_str(&format!(" (unit: {u})"));
                }
                line.push_str(&format!(" (score {:.3})", s.score));
                line
            })
            .collect();
        if !self.relations.is_empty() {
            lines.push("Relationships:".into());
            lines.extend(
                self.relations
                    .iter()
                    .map(|r| format!("[{}] {} [{}]", r.from, r.kind, r.to)),
            );
        }
        lines.join("\n")
    }
}

fn entity_chunk(e: &KgEntity) -> Chunk {
    Chunk::new(
        format!("entity:{}", e.id),
        ChunkSource::Standard,
        e.rendered(),
    )
    .with_meta("record", "entity")
    .with_meta("entity_id", e.id.clone())
    .with_meta("entity_type", e.kind.as_str())
}

fn relation_chunk(r: &KgRelation, doc: &GraphDoc) -> Chunk {
    let name = |id: &str| doc.entity(id).map(|e| e.name.clone()).unwrap_or_default();
    Chunk::new(
        r.record_id(),
        ChunkSource::Standard,
        format!("{} {} {}", name(&r.from), r.kind, name(&r.to)),
    )
    .with_meta("record", "relation")
    .with_meta("from", r.from.clone())
    .with_meta("to", r.to.clone())
    .with_meta("relation_type", r.kind.as_str())
}

impl KnowledgeGraph {
    /// Embed every entity and relationship. Refuses invalid documents.
    pub fn build(
        doc: GraphDoc,
        embedder: &dyn EmbeddingProvider,
        concurrency: usize,
    ) -> Result<Self, GraphError> {
        let report = validate(&doc);
        if !report.valid {
            return Err(GraphError::InvalidGraph(report));
        }
        let mut chunks: Vec<Chunk> = doc.entities.iter().map(entity_chunk).collect();
        chunks.extend(doc.relationships.iter().map(|r| relation_chunk(r, &doc)));
        let mut index = VectorIndex::for_provider(embedder);
        if !chunks.is_empty() {
            index.add_chunks(&chunks, embedder, concurrency)?;
        }
        Ok(Self { doc, index })
    }

    /// Reassemble a persisted graph, checking that the index covers it.
    pub fn from_parts(doc: GraphDoc, index: VectorIndex) -> Result<Self, GraphError> {
        let report = validate(&doc);
        if !report.valid {
            return Err(GraphError::InvalidGraph(report));
        }
        let expected: HashSet<String> = doc
            .entities
            .iter()
            .map(|e| format!("entity:{}", e.id))
            .chain(doc.relationships.iter().map(KgRelation::record_id))
            .collect();
        let actual: HashSet<String> = index
            .records()
            .iter()
            .map(|r| r.record_id.clone())
            .collect();
        if expected != actual {
            return Err(GraphError::Malformed(
                "graph index does not match the graph document".into(),
            ));
        }
        Ok(Self { doc, index })
    }

    pub fn doc(&self) -> &GraphDoc {
        &self.doc
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    pub fn entity_count(&self) -> usize {
        self.doc.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.doc.relationships.len()
    }

    /// Top-`k` entities for the query plus every relationship whose two
    /// endpoints are both among them.
    pub fn retrieve_subgraph(
        &self,
        query: &str,
        k: usize,
        embedder: &dyn EmbeddingProvider,
    ) -> Result<Subgraph, GraphError> {
        if self.doc.entities.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        let hits = self
            .index
            .query_filtered(query, k, f64::NEG_INFINITY, embedder, |r| {
                r.metadata.get("record").map(String::as_str) == Some("entity")
            })?;
        let by_id: BTreeMap<&str, &KgEntity> = self
            .doc
            .entities
            .iter()
            .map(|e| (e.id.as_str(), e))
            .collect();
        let entities: Vec<ScoredEntity> = hits
            .iter()
            .filter_map(|h| {
                let id = h.record.metadata.get("entity_id")?;
                by_id.get(id.as_str()).map(|e| ScoredEntity {
                    entity: (*e).clone(),
                    score: h.score,
                })
            })
            .collect();
        let ids: HashSet<&str> = entities.iter().map(|s| s.entity.id.as_str()).collect();
        let relations = self
            .doc
            .relationships
            .iter()
            .filter(|r| ids.contains(r.from.as_str()) && ids.contains(r.to.as_str()))
            .cloned()
            .collect();
        Ok(Subgraph {
            entities,
            relations,
        })
    }
}

/// `kg_retriever`: looks up goals, targets and indicators for free text.
pub fn kg_retriever_tool(
    graph: Arc<KnowledgeGraph>,
    embedder: Arc<dyn EmbeddingProvider>,
    k: usize,
) -> Tool {
    Tool::new(
        "kg_retriever",
        "Retrieves sustainability goals, targets and indicators from the standards knowledge graph that relate to the input text.",
        move |input| {
            let sub = graph
                .retrieve_subgraph(input, k, embedder.as_ref())
                .map_err(|e| e.to_string())?;
            Ok(ToolOutput::with_refs(sub.render(), sub.entity_ids()))
        },
    )
}
