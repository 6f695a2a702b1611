//! Goal / Target / Indicator graph of a sustainability standard: extraction
//! from model output, ontology validation, reviewed edits, embedding and
//! subgraph retrieval.

use thiserror::Error;

use crate::agent::AgentError;
use crate::provider::ProviderError;
use crate::semantic_index::IndexError;

mod edit;
mod extract;
mod graph;
mod model;
mod parse;
mod validate;

pub use edit::{apply_edits, parse_edit_script, EditLogEntry, EntityPatch, EntityRef, GraphEdit};
pub use extract::{extract_graph, Extraction};
pub use graph::{kg_retriever_tool, KnowledgeGraph, ScoredEntity, Subgraph};
pub use model::{EntityKind, GraphDoc, IdRemap, KgEntity, KgRelation, RelationKind};
pub use parse::{normalize_ids, parse_graph_text, parse_graph_value};
pub use validate::{parse_iso_date, validate, IssueCode, ValidationIssue, ValidationReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("standards document is empty")]
    EmptyDocument,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Prompt(#[from] AgentError),
    #[error("model output is not a graph document: {detail}")]
    UnparseableModelOutput {
        detail: String,
        raw_outputs: Vec<String>,
    },
    #[error("malformed graph document: {0}")]
    Malformed(String),
    #[error("edit {index}: target missing: {detail}")]
    EditTargetMissing { index: usize, detail: String },
    #[error("edit {index}: malformed: {detail}")]
    EditMalformed { index: usize, detail: String },
    #[error("edits would produce an invalid graph: {0}")]
    EditProducesInvalidGraph(ValidationReport),
    #[error("graph is invalid: {0}")]
    InvalidGraph(ValidationReport),
    #[error("graph has no entities")]
    EmptyGraph,
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Load a graph document file (object or JSON-LD array form).
pub fn load_graph_doc(text: &str) -> Result<GraphDoc, GraphError> {
    parse_graph_text(text).map_err(GraphError::Malformed)
}
