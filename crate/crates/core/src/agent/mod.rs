//! Chat providers, prompt templates, tools, buffer memory and the ReAct loop
//! shared by every agent in the pipeline.

use thiserror::Error;

use crate::provider::ProviderError;

pub mod memory;
pub mod parse;
pub mod prompts;
pub mod provider;
pub mod react;
pub mod template;
pub mod tool;

pub use memory::{react_prompt, synthesize, BufferMemory, MemoryEntry};
pub use parse::{parse_step, ParsedStep};
pub use provider::{ChatParams, ChatProvider, ChatRequest, MockChatProvider, MockRule};
pub use react::{
    run_react, AgentStep, AgentTranscript, ReactConfig, StepKind, TranscriptStatus,
    DEFAULT_MAX_STEPS,
};
pub use template::{render, render_prompt, vars, PromptVars};
pub use tool::{Tool, ToolOutput, ToolRegistry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("unknown template: {0}")]
    UnknownTemplate(String),
    #[error("template {template}: placeholder {{{name}}} is not bound")]
    UnboundPlaceholder { template: String, name: String },
    #[error("template {template} is malformed: {detail}")]
    MalformedTemplate { template: String, detail: String },
    #[error("unparseable agent step: {0}")]
    UnparseableStep(String),
    #[error("no final answer within {max_steps} steps")]
    StepLimitExceeded {
        max_steps: usize,
        transcript: Box<AgentTranscript>,
    },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("memory is empty")]
    EmptyMemory,
    #[error("memory already has an entry for chunk {0}")]
    DuplicateMemoryEntry(String),
    #[error("duplicate tool name: {0}")]
    DuplicateTool(String),
    #[error("invalid tool name: {0:?}")]
    InvalidTool(String),
    #[error("no tools registered")]
    NoTools,
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
}

impl AgentError {
    /// The partial transcript carried by a step-limit failure.
    pub fn transcript(&self) -> Option<&AgentTranscript> {
        match self {
            AgentError::StepLimitExceeded { transcript, .. } => Some(transcript),
            _ => None,
        }
    }
}

/// Knobs shared by every stage that runs one loop per item.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AgentSettings {
    pub react: ReactConfig,
    /// `k` for retriever tools.
    pub retrieval_k: usize,
    /// Strict: any failed item fails the stage. Lenient: failures are
    /// recorded and the stage result is flagged partial.
    pub strict: bool,
    /// Upper bound on loops running at once.
    pub concurrency: usize,
}

impl Default for AgentSettings {
    fn default() -> Self {
        Self {
            react: ReactConfig::default(),
            retrieval_k: 5,
            strict: true,
            concurrency: 1,
        }
    }
}

/// A transcript tagged with what it was produced for.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SubjectTranscript {
    pub subject: String,
    pub transcript: AgentTranscript,
}
